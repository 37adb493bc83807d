#pragma once

#include <stdexcept>
#include <string>

namespace fedcomm {

// Base class for all harness errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Wire-format violations: truncation, overflow, bad magic, unknown kinds.
class CodecError : public Error {
 public:
  using Error::Error;
};

// Broker protocol violations (MQTT / fan-out / ZMTP state machines).
class BrokerError : public Error {
 public:
  using Error::Error;
};

// Endpoint failures: connect timeouts, handshake failures, lost peers.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration (CLI flags, config files, topology files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Metrics collection misuse: duplicate events, incomplete rounds.
class MetricsError : public Error {
 public:
  using Error::Error;
};

// FL workload contract violations: dimension mismatches, empty inputs.
class FlError : public Error {
 public:
  using Error::Error;
};

// Stressor lifecycle misuse.
class StressError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedcomm
