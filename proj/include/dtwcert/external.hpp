#pragma once

#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dtwcert/score_function.hpp"

namespace dtwcert {

// Wire protocol (ASCII, LF-terminated, single spaces):
//   client: "DTWCERT 1"                     server: "OK <name>"
//   client: "SCORE <T> <C> v_00 v_01 ..."   server: "R <score>" | "E <message>"
// Values are row-major, printed in shortest round-trip form.

inline constexpr std::string_view kHandshake = "DTWCERT 1";

std::string format_score_request(const Matrix& x);

/// Parses one response line. "E ..." and malformed lines raise ProtocolError; a
/// non-finite score raises NonFiniteScore.
double parse_score_response(std::string_view line);

struct ExternalConfig {
  std::string command;   // launched with /bin/sh -c, spoken to over stdin/stdout
  std::string address;   // "host:port" stream socket; used when command is empty
  int timeout_ms = 10000;
  std::size_t pool_size = 1;
};

/// One handshaken connection. Requests on a connection are strictly serialized.
class ExternalConnection {
 public:
  explicit ExternalConnection(const ExternalConfig& cfg);
  ~ExternalConnection();

  ExternalConnection(const ExternalConnection&) = delete;
  ExternalConnection& operator=(const ExternalConnection&) = delete;

  const std::string& server_name() const noexcept { return server_name_; }

  /// Pipelines the requests in chunks and returns the scores in request order.
  std::vector<double> score_batch(std::span<const Matrix> xs);

  /// Sends one raw line and returns the raw response line (diagnostics and tests).
  std::string round_trip(std::string_view line);

 private:
  void write_line(std::string_view line);
  std::string read_line();

  ExternalConfig cfg_;
  int read_fd_ = -1;
  int write_fd_ = -1;
  int child_pid_ = -1;
  std::string buffer_;
  std::string server_name_;
};

/// Score function backed by a pool of external connections; safe for concurrent use.
class ExternalScore final : public ScoreFunction {
 public:
  explicit ExternalScore(const ExternalConfig& cfg);

  double score(const Matrix& x) const override;
  std::vector<double> score_batch(std::span<const Matrix> xs) const override;
  std::string name() const override { return "external:" + name_; }

 private:
  class Lease;
  ExternalConnection& acquire() const;
  void release(ExternalConnection& conn) const;

  std::vector<std::unique_ptr<ExternalConnection>> pool_;
  mutable std::vector<ExternalConnection*> idle_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::string name_;
};

}  // namespace dtwcert
