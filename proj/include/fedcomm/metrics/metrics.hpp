#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fedcomm::metrics {

enum class Direction { down, up };

// One model transfer between the server and a device, timed in clock seconds.
struct CommEvent {
  uint16_t device_id = 0;
  uint16_t round = 0;
  Direction direction = Direction::down;
  uint64_t bytes = 0;  // wire bytes of the transfer, retransmissions excluded
  double start = 0.0;
  double end = 0.0;
  uint64_t retransmissions = 0;
  uint32_t missing_chunks = 0;
};

// Concurrent sink for transfer events. Model transfers are at-most-once per
// (device, round, direction).
class Collector {
 public:
  void record(const CommEvent& event);
  void close();
  bool closed() const;
  std::vector<CommEvent> events() const;

 private:
  mutable std::mutex mu_;
  bool closed_ = false;
  std::vector<CommEvent> events_;
  std::set<std::tuple<uint16_t, uint16_t, Direction>> seen_;
};

struct ConfigEcho {
  std::string protocol = "tcp";
  std::string model = "vgg8";
  std::string link_preset = "unlimited";
  double loss_pct = 0.0;
  std::string stress = "none";
  std::string clock = "virtual";
  uint32_t rounds = 5;
  uint32_t devices = 4;
  uint64_t seed = 1;
};

struct RoundMetrics {
  uint16_t round = 0;
  double comm_time_s = 0.0;       // broadcast span + upload span
  double broadcast_time_s = 0.0;  // first send start to last delivery end
  double upload_time_s = 0.0;
  uint64_t bytes_down = 0;
  uint64_t bytes_up = 0;
  uint64_t retransmissions_down = 0;
  uint64_t retransmissions_up = 0;
  uint32_t missing_chunks = 0;
  double accuracy = 0.0;
  double train_loss = 0.0;
};

struct RunTotals {
  double comm_time_s = 0.0;
  uint64_t bytes_down = 0;
  uint64_t bytes_up = 0;
  uint64_t retransmissions_down = 0;
  uint64_t retransmissions_up = 0;
  uint64_t retransmissions = 0;
  uint32_t missing_chunks = 0;
};

struct RunReport {
  // meta (excluded from determinism comparisons)
  std::string harness_version;
  int64_t created_unix_ms = 0;
  // data
  ConfigEcho config;
  double setup_time_s = 0.0;
  std::vector<RoundMetrics> rounds;
  RunTotals totals;
  double final_accuracy = 0.0;
};

inline constexpr const char* kReportSchema = "fedcomm-report/v1";
inline constexpr const char* kHarnessVersion = "0.1.0";

struct FinalizeArgs {
  ConfigEcho config;
  uint32_t expected_rounds = 0;
  uint32_t device_count = 0;
  std::vector<double> accuracies;    // one per round
  std::vector<double> train_losses;  // one per round
  double final_accuracy = 0.0;       // accuracy after the last round (or of the
                                     // initial model when rounds == 0)
  double setup_time_s = 0.0;
};

// Validates completeness (every device and direction present for every
// configured round) and aggregates phase spans per round.
RunReport finalize(const Collector& collector, const FinalizeArgs& args);

void write_report(const RunReport& report, const std::string& path);
RunReport read_report(const std::string& path);

// Deterministic serialization of the data section only.
std::string report_data_json(const RunReport& report);

// protocol,preset,loss_pct,stress,model,round,comm_time_s,accuracy,retransmissions
// per (run, round). Failed sweep cells append a row with "failed" in the round
// column and empty metric cells.
std::string plot_csv_header();
std::string plot_csv_rows(const RunReport& report);
std::string plot_csv_failed_row(const ConfigEcho& config);
void export_plot_csv(const std::vector<RunReport>& reports, const std::string& path);

}  // namespace fedcomm::metrics
