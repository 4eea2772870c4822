#include <gtest/gtest.h>

#include <cstdio>
#include <map>
#include <string>

#include <spdlog/spdlog.h>

namespace {

// Tests named C<NN>_<Title> report under criterion NN.
class CriterionPrinter : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo& info) override {
    const std::string name = info.name();
    if (name.size() < 4 || name[0] != 'C') return;
    const int number = std::stoi(name.substr(1, 2));
    const bool passed = info.result()->Passed();
    results_[number] = {passed, name.substr(4), info.result()->elapsed_time()};
  }

  void OnTestProgramEnd(const ::testing::UnitTest& /*unit*/) override {
    std::printf("\n");
    for (const auto& [number, result] : results_)
      std::printf("criterion %2d %s  %s (%.2f s)\n", number, result.passed ? "PASS" : "FAIL", result.title.c_str(),
                  static_cast<double>(result.elapsed_ms) / 1000.0);
    std::fflush(stdout);
  }

 private:
  struct Result {
    bool passed = false;
    std::string title;
    long long elapsed_ms = 0;
  };
  std::map<int, Result> results_;
};

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  spdlog::set_level(spdlog::level::warn);
  ::testing::UnitTest::GetInstance()->listeners().Append(new CriterionPrinter);
  return RUN_ALL_TESTS();
}
