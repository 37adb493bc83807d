#include "fedcomm/metrics/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "fedcomm/errors.hpp"

namespace fedcomm::metrics {

using ordered_json = nlohmann::ordered_json;

void Collector::record(const CommEvent& event) {
  if (event.end < event.start) {
    throw MetricsError("metrics: event end precedes start (device " +
                       std::to_string(event.device_id) + ", round " +
                       std::to_string(event.round) + ")");
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (closed_) throw MetricsError("metrics: record on closed collector");
  const auto key = std::make_tuple(event.device_id, event.round, event.direction);
  if (!seen_.insert(key).second) {
    throw MetricsError("metrics: duplicate transfer for device " +
                       std::to_string(event.device_id) + ", round " +
                       std::to_string(event.round) + ", direction " +
                       (event.direction == Direction::down ? std::string("down")
                                                           : std::string("up")));
  }
  events_.push_back(event);
}

void Collector::close() {
  std::lock_guard<std::mutex> lock(mu_);
  closed_ = true;
}

bool Collector::closed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return closed_;
}

std::vector<CommEvent> Collector::events() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_;
}

RunReport finalize(const Collector& collector, const FinalizeArgs& args) {
  auto events = collector.events();
  std::sort(events.begin(), events.end(), [](const CommEvent& a, const CommEvent& b) {
    if (a.round != b.round) return a.round < b.round;
    if (a.direction != b.direction) return a.direction == Direction::down;
    return a.device_id < b.device_id;
  });

  // Completeness: every (device, round, direction) must be present.
  std::set<std::tuple<uint16_t, uint16_t, Direction>> seen;
  for (const auto& e : events) seen.insert({e.device_id, e.round, e.direction});
  std::string missing;
  for (uint32_t r = 0; r < args.expected_rounds; ++r) {
    for (uint32_t d = 0; d < args.device_count; ++d) {
      for (Direction dir : {Direction::down, Direction::up}) {
        if (!seen.count({uint16_t(d), uint16_t(r), dir})) {
          if (!missing.empty()) missing += ", ";
          missing += "(device " + std::to_string(d) + ", round " + std::to_string(r) + ", " +
                     (dir == Direction::down ? "down" : "up") + ")";
        }
      }
    }
  }
  if (!missing.empty()) {
    throw MetricsError("metrics: incomplete rounds, missing transfers: " + missing);
  }
  if (args.accuracies.size() != args.expected_rounds ||
      args.train_losses.size() != args.expected_rounds) {
    throw MetricsError("metrics: accuracy/loss series length does not match rounds");
  }

  RunReport report;
  report.harness_version = kHarnessVersion;
  report.created_unix_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
  report.config = args.config;
  report.setup_time_s = args.setup_time_s;
  report.final_accuracy = args.final_accuracy;

  for (uint32_t r = 0; r < args.expected_rounds; ++r) {
    RoundMetrics rm;
    rm.round = uint16_t(r);
    double down_start = std::numeric_limits<double>::infinity(), down_end = 0.0;
    double up_start = std::numeric_limits<double>::infinity(), up_end = 0.0;
    for (const auto& e : events) {
      if (e.round != r) continue;
      if (e.direction == Direction::down) {
        rm.bytes_down += e.bytes;
        rm.retransmissions_down += e.retransmissions;
        down_start = std::min(down_start, e.start);
        down_end = std::max(down_end, e.end);
      } else {
        rm.bytes_up += e.bytes;
        rm.retransmissions_up += e.retransmissions;
        up_start = std::min(up_start, e.start);
        up_end = std::max(up_end, e.end);
      }
      rm.missing_chunks += e.missing_chunks;
    }
    rm.broadcast_time_s = down_end > down_start ? down_end - down_start : 0.0;
    rm.upload_time_s = up_end > up_start ? up_end - up_start : 0.0;
    rm.comm_time_s = rm.broadcast_time_s + rm.upload_time_s;
    rm.accuracy = args.accuracies[r];
    rm.train_loss = args.train_losses[r];

    report.totals.comm_time_s += rm.comm_time_s;
    report.totals.bytes_down += rm.bytes_down;
    report.totals.bytes_up += rm.bytes_up;
    report.totals.retransmissions_down += rm.retransmissions_down;
    report.totals.retransmissions_up += rm.retransmissions_up;
    report.totals.missing_chunks += rm.missing_chunks;
    report.rounds.push_back(rm);
  }
  report.totals.retransmissions =
      report.totals.retransmissions_down + report.totals.retransmissions_up;
  return report;
}

namespace {

ordered_json config_to_json(const ConfigEcho& c) {
  ordered_json j;
  j["protocol"] = c.protocol;
  j["model"] = c.model;
  j["link_preset"] = c.link_preset;
  j["loss_pct"] = c.loss_pct;
  j["stress"] = c.stress;
  j["clock"] = c.clock;
  j["rounds"] = c.rounds;
  j["devices"] = c.devices;
  j["seed"] = c.seed;
  return j;
}

ConfigEcho config_from_json(const nlohmann::json& j) {
  ConfigEcho c;
  c.protocol = j.at("protocol");
  c.model = j.at("model");
  c.link_preset = j.at("link_preset");
  c.loss_pct = j.at("loss_pct");
  c.stress = j.at("stress");
  c.clock = j.at("clock");
  c.rounds = j.at("rounds");
  c.devices = j.at("devices");
  c.seed = j.at("seed");
  return c;
}

ordered_json data_to_json(const RunReport& r) {
  ordered_json data;
  data["config"] = config_to_json(r.config);
  data["setup_time_s"] = r.setup_time_s;
  ordered_json rounds = ordered_json::array();
  for (const auto& rm : r.rounds) {
    ordered_json jr;
    jr["round"] = rm.round;
    jr["comm_time_s"] = rm.comm_time_s;
    jr["broadcast_time_s"] = rm.broadcast_time_s;
    jr["upload_time_s"] = rm.upload_time_s;
    jr["bytes_down"] = rm.bytes_down;
    jr["bytes_up"] = rm.bytes_up;
    jr["retransmissions_down"] = rm.retransmissions_down;
    jr["retransmissions_up"] = rm.retransmissions_up;
    jr["missing_chunks"] = rm.missing_chunks;
    jr["accuracy"] = rm.accuracy;
    jr["train_loss"] = rm.train_loss;
    rounds.push_back(jr);
  }
  data["rounds"] = rounds;
  ordered_json totals;
  totals["comm_time_s"] = r.totals.comm_time_s;
  totals["bytes_down"] = r.totals.bytes_down;
  totals["bytes_up"] = r.totals.bytes_up;
  totals["retransmissions_down"] = r.totals.retransmissions_down;
  totals["retransmissions_up"] = r.totals.retransmissions_up;
  totals["retransmissions"] = r.totals.retransmissions;
  totals["missing_chunks"] = r.totals.missing_chunks;
  data["totals"] = totals;
  data["final_accuracy"] = r.final_accuracy;
  return data;
}

}  // namespace

std::string report_data_json(const RunReport& report) { return data_to_json(report).dump(); }

void write_report(const RunReport& report, const std::string& path) {
  ordered_json j;
  j["schema"] = kReportSchema;
  ordered_json meta;
  meta["harness_version"] = report.harness_version;
  meta["created_unix_ms"] = report.created_unix_ms;
  j["meta"] = meta;
  j["data"] = data_to_json(report);
  std::ofstream out(path);
  if (!out) throw MetricsError("write_report: cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw MetricsError("write_report: write failed for '" + path + "'");
}

RunReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MetricsError("read_report: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  if (j.at("schema") != kReportSchema) {
    throw MetricsError("read_report: unexpected schema " + j.at("schema").dump());
  }
  RunReport r;
  r.harness_version = j.at("meta").at("harness_version");
  r.created_unix_ms = j.at("meta").at("created_unix_ms");
  const auto& data = j.at("data");
  r.config = config_from_json(data.at("config"));
  r.setup_time_s = data.at("setup_time_s");
  for (const auto& jr : data.at("rounds")) {
    RoundMetrics rm;
    rm.round = jr.at("round");
    rm.comm_time_s = jr.at("comm_time_s");
    rm.broadcast_time_s = jr.at("broadcast_time_s");
    rm.upload_time_s = jr.at("upload_time_s");
    rm.bytes_down = jr.at("bytes_down");
    rm.bytes_up = jr.at("bytes_up");
    rm.retransmissions_down = jr.at("retransmissions_down");
    rm.retransmissions_up = jr.at("retransmissions_up");
    rm.missing_chunks = jr.at("missing_chunks");
    rm.accuracy = jr.at("accuracy");
    rm.train_loss = jr.at("train_loss");
    r.rounds.push_back(rm);
  }
  const auto& totals = data.at("totals");
  r.totals.comm_time_s = totals.at("comm_time_s");
  r.totals.bytes_down = totals.at("bytes_down");
  r.totals.bytes_up = totals.at("bytes_up");
  r.totals.retransmissions_down = totals.at("retransmissions_down");
  r.totals.retransmissions_up = totals.at("retransmissions_up");
  r.totals.retransmissions = totals.at("retransmissions");
  r.totals.missing_chunks = totals.at("missing_chunks");
  r.final_accuracy = data.at("final_accuracy");
  return r;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string plot_csv_header() {
  return "protocol,preset,loss_pct,stress,model,round,comm_time_s,accuracy,retransmissions\n";
}

std::string plot_csv_rows(const RunReport& report) {
  std::string out;
  const auto& c = report.config;
  for (const auto& rm : report.rounds) {
    out += c.protocol + "," + c.link_preset + "," + fmt_double(c.loss_pct) + "," + c.stress +
           "," + c.model + "," + std::to_string(rm.round) + "," + fmt_double(rm.comm_time_s) +
           "," + fmt_double(rm.accuracy) + "," +
           std::to_string(rm.retransmissions_down + rm.retransmissions_up) + "\n";
  }
  return out;
}

std::string plot_csv_failed_row(const ConfigEcho& c) {
  return c.protocol + "," + c.link_preset + "," + fmt_double(c.loss_pct) + "," + c.stress +
         "," + c.model + ",failed,,,\n";
}

void export_plot_csv(const std::vector<RunReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MetricsError("export_plot_csv: cannot open '" + path + "' for writing");
  out << plot_csv_header();
  for (const auto& r : reports) out << plot_csv_rows(r);
  if (!out) throw MetricsError("export_plot_csv: write failed for '" + path + "'");
}

}  // namespace fedcomm::metrics
