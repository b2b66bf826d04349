#pragma once

// Run directories, CSV and SVG writers, and a small worker pool for seed shards.

#include <atomic>
#include <concepts>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace ergolab {

/// Formats a double with %.17g (round-trips exactly).
std::string format_double(double v);

/// First line of every emitted file: "# ergolab <command> config=<hash> seeds=<s1;s2;...>".
std::string provenance_line(const std::string& command, const std::string& config_hash,
                            const std::vector<std::uint64_t>& seeds);

/// A fresh directory <root>/<name>-<hash8>-<command>-<k>, k the first unused index.
/// Existing directories are never reused or modified.
class RunDirectory {
 public:
  RunDirectory(const std::filesystem::path& root, const std::string& name, const std::string& command,
               const std::string& config_hash, std::vector<std::uint64_t> seeds);

  const std::filesystem::path& path() const { return path_; }
  const std::string& id() const { return id_; }
  const std::string& provenance() const { return provenance_; }
  /// Opens a new file (fails if it exists) and writes the provenance line.
  std::ofstream create(const std::string& filename, const std::string& comment_prefix = "# ",
                       const std::string& comment_suffix = "") const;

 private:
  std::filesystem::path path_;
  std::string id_;
  std::string provenance_;
};

/// Comma-separated rows with a header, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const RunDirectory& dir, const std::string& filename, const std::vector<std::string>& columns);

  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(std::uint64_t v);
  template <std::integral T>
  CsvWriter& cell(T v) {
    if constexpr (std::is_signed_v<T>) return cell(static_cast<std::int64_t>(v));
    else return cell(static_cast<std::uint64_t>(v));
  }
  CsvWriter& cell(bool v) { return cell(std::string(v ? "true" : "false")); }
  void end_row();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool line = true;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Self-contained SVG line / scatter plot.
void write_svg_plot(const RunDirectory& dir, const std::string& filename, const PlotSpec& spec,
                    const std::vector<PlotSeries>& series);

/// Runs fn(i) for i in [0, n) on up to `threads` workers; results are returned in index order.
/// The first exception thrown by any task is rethrown after all workers finish.
template <class Fn>
auto parallel_map(std::size_t n, std::size_t threads, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> results(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t count = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace ergolab
