#include "longconv/profiler.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <vector>

namespace longconv {

double measure_throughput(const std::function<void()>& step, int n_steps, int warmup_steps,
                          int repetitions) {
  if (n_steps < 1) throw TensorError("measure_throughput: n_steps must be >= 1");
  if (warmup_steps < 0) throw TensorError("measure_throughput: negative warmup_steps");
  if (repetitions < 3) throw TensorError("measure_throughput: needs >= 3 repetitions");
  using Clock = std::chrono::steady_clock;
  std::vector<double> rates;
  rates.reserve(static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    for (int i = 0; i < warmup_steps; ++i) step();
    const auto t0 = Clock::now();
    for (int i = 0; i < n_steps; ++i) step();
    const auto t1 = Clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    rates.push_back(static_cast<double>(n_steps) / std::max(secs, 1e-12));
  }
  std::sort(rates.begin(), rates.end());
  return rates[rates.size() / 2];
}

std::int64_t track_peak_memory(const std::function<void()>& run) {
  auto& tracker = MemoryTracker::instance();
  tracker.reset_peak();
  run();
  return tracker.peak_bytes();
}

void append_report_csv(const std::string& path, const BenchReport& report) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream os(path, std::ios::app);
  if (!os) throw TensorError("cannot open report csv " + path);
  if (fresh) {
    os << "# flops_g = analytic per-forward giga-MACs (1 MAC = 1 FLOP); "
          "peak_bytes = live tensor allocation high-water mark\n";
    os << "task,model,quality,flops_g,steps_per_sec,peak_bytes,params,seed\n";
  }
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.4f,%lld,%lld,%llu\n", report.task.c_str(),
                report.model.c_str(), report.quality, report.flops_g, report.steps_per_sec,
                static_cast<long long>(report.peak_bytes), static_cast<long long>(report.params),
                static_cast<unsigned long long>(report.seed));
  os << buf;
}

}  // namespace longconv
