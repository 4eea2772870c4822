#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <map>

#include "videoservice/errors.h"
#include "videoservice/service_config.h"

namespace videoservice {
namespace {

EnvLookup FakeEnv(std::map<std::string, std::string> values) {
  return [values](const std::string& name) -> std::optional<std::string> {
    auto it = values.find(name);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
}

TEST(ServiceConfigTest, Defaults) {
  const ServiceConfig c = LoadServiceConfig(std::nullopt, FakeEnv({}));
  EXPECT_EQ(c.h264_port, 8888);
  EXPECT_EQ(c.mpjpeg_port, 8887);
  EXPECT_EQ(c.control_port, 8886);
  EXPECT_EQ(c.settings.jpeg_quality, 70);
  EXPECT_EQ(c.settings.fps, 30);
  EXPECT_EQ(c.jpeg_encoder, EncoderKind::kSoftware);
  EXPECT_EQ(c.source.mode, SourceMode::kSynthetic);
  EXPECT_EQ(c.multipart.boundary, "frame");
}

TEST(ServiceConfigTest, EnvironmentVariables) {
  const ServiceConfig c = LoadServiceConfig(std::nullopt, FakeEnv({{"VIDEOSERVICE_JPEG_QUALITY", "10"},
                                                                   {"VIDEOSERVICE_JPEG_ENCODER", "hardware"},
                                                                   {"VIDEOSERVICE_H264_PORT", "9000"},
                                                                   {"VIDEOSERVICE_MPJPEG_PORT", "9001"},
                                                                   {"VIDEOSERVICE_CONTROL_PORT", "9002"},
                                                                   {"VIDEOSERVICE_FPS", "15"},
                                                                   {"VIDEOSERVICE_SOURCE", "capture"}}));
  EXPECT_EQ(c.settings.jpeg_quality, 10);
  EXPECT_EQ(c.jpeg_encoder, EncoderKind::kHardware);
  EXPECT_EQ(c.h264_port, 9000);
  EXPECT_EQ(c.mpjpeg_port, 9001);
  EXPECT_EQ(c.control_port, 9002);
  EXPECT_EQ(c.settings.fps, 15);
  EXPECT_EQ(c.source.fps, 15);
  EXPECT_EQ(c.source.mode, SourceMode::kCapture);
}

TEST(ServiceConfigTest, QualityNinetySixRejected) {
  EXPECT_THROW(LoadServiceConfig(std::nullopt, FakeEnv({{"VIDEOSERVICE_JPEG_QUALITY", "96"}})), ConfigError);
  ServiceConfig c;
  c.settings.jpeg_quality = 96;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ServiceConfigTest, MalformedEnvironmentRejected) {
  EXPECT_THROW(LoadServiceConfig(std::nullopt, FakeEnv({{"VIDEOSERVICE_FPS", "fast"}})), ConfigError);
  EXPECT_THROW(LoadServiceConfig(std::nullopt, FakeEnv({{"VIDEOSERVICE_H264_PORT", "70000"}})), ConfigError);
  EXPECT_THROW(LoadServiceConfig(std::nullopt, FakeEnv({{"VIDEOSERVICE_JPEG_ENCODER", "gpu"}})), ConfigError);
  EXPECT_THROW(LoadServiceConfig(std::nullopt, FakeEnv({{"VIDEOSERVICE_SOURCE", "file"}})), ConfigError);
}

TEST(ServiceConfigTest, FileThenEnvironmentThenOverrides) {
  const std::string path = ::testing::TempDir() + "/videoservice_config_test.json";
  std::ofstream(path) << R"({"fps": 20, "jpeg_quality": 40, "h264_port": 7000, "boundary": "cam"})";
  ServiceConfig c = LoadServiceConfig(path, FakeEnv({{"VIDEOSERVICE_FPS", "25"}}));
  EXPECT_EQ(c.settings.fps, 25);          // environment beats file
  EXPECT_EQ(c.settings.jpeg_quality, 40);  // file beats default
  EXPECT_EQ(c.h264_port, 7000);
  EXPECT_EQ(c.multipart.boundary, "cam");
  ApplyJson(c, {{"fps", 12}});  // flags beat environment
  EXPECT_EQ(c.settings.fps, 12);
  std::remove(path.c_str());
}

TEST(ServiceConfigTest, UnknownFileKeyRejected) {
  ServiceConfig c;
  EXPECT_THROW(ApplyJson(c, {{"colour", "red"}}), ConfigError);
  EXPECT_THROW(ApplyJson(c, {{"fps", "ten"}}), ConfigError);
}

TEST(ServiceConfigTest, RoundTripsThroughJson) {
  ServiceConfig c;
  c.settings.fps = 12;
  c.multipart.boundary = "xyz";
  c.h264_port = 1234;
  ServiceConfig d;
  ApplyJson(d, c.ToJson());
  EXPECT_EQ(d.ToJson(), c.ToJson());
}

}  // namespace
}  // namespace videoservice
