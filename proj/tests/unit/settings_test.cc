#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <set>
#include <thread>

#include "videoservice/settings.h"

namespace videoservice {
namespace {

using nlohmann::json;

TEST(SettingsStoreTest, Defaults) {
  SettingsStore store;
  const CameraSettings s = store.Snapshot();
  EXPECT_EQ(s.brightness, 0.0);
  EXPECT_EQ(s.contrast, 1.0);
  EXPECT_EQ(s.jpeg_quality, 70);
  EXPECT_EQ(s.fps, 30);
}

TEST(SettingsStoreTest, PatchBumpsVersionOnce) {
  SettingsStore store;
  const uint64_t v0 = store.Snapshot().version;
  const CameraSettings s = store.ApplyPatch(json{{"brightness", 0.5}});
  EXPECT_EQ(s.brightness, 0.5);
  EXPECT_EQ(s.version, v0 + 1);
  EXPECT_EQ(store.Snapshot(), s);
}

TEST(SettingsStoreTest, OutOfRangeQualityRejectedWithRange) {
  SettingsStore store;
  try {
    store.ApplyPatch(json{{"jpeg_quality", 96}});
    FAIL() << "accepted quality 96";
  } catch (const SettingsValidationError& e) {
    EXPECT_EQ(e.key(), "jpeg_quality");
    EXPECT_NE(std::string(e.what()).find("[0, 95]"), std::string::npos) << e.what();
  }
  EXPECT_EQ(store.Snapshot().version, 0u);
  EXPECT_EQ(store.Snapshot().jpeg_quality, 70);
}

TEST(SettingsStoreTest, NoPartialApplication) {
  SettingsStore store;
  EXPECT_THROW(store.ApplyPatch(json{{"brightness", 0.1}, {"contrast", 3.0}}), SettingsValidationError);
  EXPECT_EQ(store.Snapshot().brightness, 0.0);
  EXPECT_EQ(store.Snapshot().version, 0u);
}

TEST(SettingsStoreTest, UnknownKeyNamed) {
  SettingsStore store;
  try {
    store.ApplyPatch(json{{"exposure", 1}});
    FAIL();
  } catch (const SettingsValidationError& e) {
    EXPECT_EQ(e.key(), "exposure");
  }
}

TEST(SettingsStoreTest, TypeErrorsAndNonObjects) {
  SettingsStore store;
  EXPECT_THROW(store.ApplyPatch(json{{"fps", "thirty"}}), SettingsValidationError);
  EXPECT_THROW(store.ApplyPatch(json{{"fps", 29.5}}), SettingsValidationError);
  EXPECT_THROW(store.ApplyPatch(json{{"brightness", nullptr}}), SettingsValidationError);
  EXPECT_THROW(store.ApplyPatch(json::array({1, 2})), SettingsValidationError);
  EXPECT_THROW(store.ApplyPatch(json(5)), SettingsValidationError);
  EXPECT_EQ(store.Snapshot().version, 0u);
}

TEST(SettingsStoreTest, BoundariesAccepted) {
  SettingsStore store;
  EXPECT_NO_THROW(store.ApplyPatch(json{{"brightness", -1.0}, {"contrast", 2.0}, {"jpeg_quality", 0}, {"fps", 120}}));
  EXPECT_NO_THROW(store.ApplyPatch(json{{"brightness", 1}, {"contrast", 0}, {"jpeg_quality", 95}, {"fps", 1}}));
  EXPECT_EQ(store.Snapshot().version, 2u);
}

TEST(SettingsStoreTest, RandomMalformedBodiesNeverChangeVersion) {
  SettingsStore store;
  std::mt19937 rng(7);
  const std::vector<std::string> keys = {"brightness", "contrast", "jpeg_quality", "fps", "bogus", ""};
  auto random_value = [&]() -> json {
    switch (rng() % 6) {
      case 0: return json(static_cast<double>(rng() % 1000) - 500.0);
      case 1: return json("text");
      case 2: return json(nullptr);
      case 3: return json::array({1});
      case 4: return json{{"nested", 1}};
      default: return json(static_cast<int>(rng() % 400) - 200);
    }
  };
  int accepted = 0;
  for (int i = 0; i < 2000; ++i) {
    json patch = json::object();
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < n; ++k) patch[keys[rng() % keys.size()]] = random_value();
    const CameraSettings before = store.Snapshot();
    try {
      const CameraSettings after = store.ApplyPatch(patch);
      ++accepted;
      EXPECT_EQ(after.version, before.version + 1);
      EXPECT_NO_THROW(after.Validate());
    } catch (const SettingsValidationError&) {
      EXPECT_EQ(store.Snapshot(), before);
    }
  }
  EXPECT_EQ(store.Snapshot().version, static_cast<uint64_t>(accepted));
}

TEST(SettingsStoreTest, ConcurrentReadersSeeWholeVersions) {
  SettingsStore store;
  std::atomic<bool> done{false};
  std::atomic<int> torn{0};
  std::thread reader([&] {
    while (!done) {
      const CameraSettings s = store.Snapshot();
      // Writer keeps brightness == version / 1000 and fps tied to version parity.
      if (s.version > 0 && (s.brightness != static_cast<double>(s.version) / 1000.0 || s.fps != 10 + static_cast<int>(s.version % 2)))
        ++torn;
    }
  });
  for (int v = 1; v <= 500; ++v)
    store.ApplyPatch(json{{"brightness", v / 1000.0}, {"fps", 10 + v % 2}});
  done = true;
  reader.join();
  EXPECT_EQ(torn.load(), 0);
}

TEST(SettingsJsonTest, FieldsPresent) {
  const json j = ToJson(CameraSettings{});
  for (const char* key : {"brightness", "contrast", "jpeg_quality", "fps", "version"}) EXPECT_TRUE(j.contains(key));
}

}  // namespace
}  // namespace videoservice
