// Acceptance battery: one line per criterion, non-zero exit on any failure.
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "netx/acceptance.hpp"

int main(int argc, char** argv) {
  netx::acceptance::BatteryOptions o;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--workers")) o.workers = static_cast<unsigned>(std::atoi(argv[i + 1]));
    else if (!std::strcmp(argv[i], "--seed")) o.seed = std::strtoull(argv[i + 1], nullptr, 10);
  }
  auto res = netx::acceptance::run_battery(o, [](const netx::acceptance::CriterionResult& r) {
    std::printf("%s\n", netx::acceptance::format_line(r).c_str());
    std::fflush(stdout);
  });
  std::printf("battery digest %s, %.1fs total, %s\n", res.digest.c_str(), res.seconds,
              res.passed() ? "all criteria passed" : "FAILED");
  return res.passed() ? 0 : 1;
}
