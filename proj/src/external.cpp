#include "dtwcert/external.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <thread>

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "dtwcert/error.hpp"
#include "dtwcert/format.hpp"

namespace dtwcert {

namespace {

constexpr std::size_t kChunk = 64;

int connect_tcp(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ConnectFailure, "address must be host:port");
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (getaddrinfo(host.c_str(), port.c_str(), &hints, &found) != 0 || found == nullptr) {
    throw Error(ErrorCode::ConnectFailure, "cannot resolve " + address);
  }
  int fd = -1;
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(found);
  if (fd < 0) throw Error(ErrorCode::ConnectFailure, "cannot connect to " + address);
  return fd;
}

}  // namespace

std::string format_score_request(const Matrix& x) {
  std::string line = "SCORE " + std::to_string(x.rows()) + " " + std::to_string(x.cols());
  for (const double v : x.flat()) {
    line += ' ';
    line += format_double(v);
  }
  return line;
}

double parse_score_response(std::string_view line) {
  if (line.size() >= 2 && line.substr(0, 2) == "E ") {
    throw Error(ErrorCode::ProtocolError, "scorer error: " + std::string(line.substr(2)));
  }
  if (line.size() < 3 || line.substr(0, 2) != "R ") {
    throw Error(ErrorCode::ProtocolError, "unexpected line '" + std::string(line) + "'");
  }
  const auto value = parse_double(line.substr(2));
  if (!value) throw Error(ErrorCode::ProtocolError, "bad score in '" + std::string(line) + "'");
  if (!std::isfinite(*value)) {
    throw Error(ErrorCode::NonFiniteScore, "scorer returned '" + std::string(line.substr(2)) + "'");
  }
  return *value;
}

ExternalConnection::ExternalConnection(const ExternalConfig& cfg) : cfg_(cfg) {
  std::signal(SIGPIPE, SIG_IGN);
  if (!cfg.command.empty()) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw Error(ErrorCode::ConnectFailure, "pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw Error(ErrorCode::ConnectFailure, "pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorCode::ConnectFailure, "fork failed");
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", cfg.command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    child_pid_ = pid;
  } else if (!cfg.address.empty()) {
    read_fd_ = connect_tcp(cfg.address);
    write_fd_ = read_fd_;
  } else {
    throw Error(ErrorCode::ConnectFailure, "no scorer command or address configured");
  }

  try {
    write_line(kHandshake);
    const std::string reply = read_line();
    if (reply.rfind("OK", 0) != 0) throw Error(ErrorCode::ProtocolError, "handshake reply '" + reply + "'");
    server_name_ = reply.size() > 3 ? reply.substr(3) : std::string("unnamed");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ProtocolError || e.code() == ErrorCode::Timeout) throw;
    throw Error(ErrorCode::ConnectFailure, std::string("handshake: ") + e.what());
  }
}

ExternalConnection::~ExternalConnection() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_pid_ > 0) {
    // EOF on stdin ends a well-behaved scorer; escalate if it lingers
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(child_pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(child_pid_, SIGKILL);
    ::waitpid(child_pid_, nullptr, 0);
  }
}

void ExternalConnection::write_line(std::string_view line) {
  std::string data(line);
  data += '\n';
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ConnectFailure, std::string("write: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ExternalConnection::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg_.timeout_ms);
  while (true) {
    const auto pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - std::chrono::steady_clock::now()).count();
    if (left <= 0) throw Error(ErrorCode::Timeout, std::to_string(cfg_.timeout_ms) + " ms");
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ConnectFailure, std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) throw Error(ErrorCode::Timeout, std::to_string(cfg_.timeout_ms) + " ms");
    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ConnectFailure, std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) throw Error(ErrorCode::ConnectFailure, "scorer closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string ExternalConnection::round_trip(std::string_view line) {
  write_line(line);
  return read_line();
}

std::vector<double> ExternalConnection::score_batch(std::span<const Matrix> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (std::size_t start = 0; start < xs.size(); start += kChunk) {
    const std::size_t end = std::min(xs.size(), start + kChunk);
    std::string payload;
    for (std::size_t i = start; i < end; ++i) {
      payload += format_score_request(xs[i]);
      if (i + 1 < end) payload += '\n';
    }
    write_line(payload);
    for (std::size_t i = start; i < end; ++i) out.push_back(parse_score_response(read_line()));
  }
  return out;
}

class ExternalScore::Lease {
 public:
  explicit Lease(const ExternalScore& owner) : owner_(owner), conn_(owner.acquire()) {}
  ~Lease() { owner_.release(conn_); }
  ExternalConnection& get() { return conn_; }

 private:
  const ExternalScore& owner_;
  ExternalConnection& conn_;
};

ExternalScore::ExternalScore(const ExternalConfig& cfg) {
  const std::size_t size = std::max<std::size_t>(1, cfg.pool_size);
  for (std::size_t i = 0; i < size; ++i) {
    pool_.push_back(std::make_unique<ExternalConnection>(cfg));
    idle_.push_back(pool_.back().get());
  }
  name_ = pool_.front()->server_name();
}

ExternalConnection& ExternalScore::acquire() const {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return !idle_.empty(); });
  ExternalConnection* conn = idle_.back();
  idle_.pop_back();
  return *conn;
}

void ExternalScore::release(ExternalConnection& conn) const {
  {
    std::lock_guard lock(mutex_);
    idle_.push_back(&conn);
  }
  cv_.notify_one();
}

double ExternalScore::score(const Matrix& x) const {
  Lease lease(*this);
  const Matrix one[] = {x};
  return lease.get().score_batch(one).front();
}

std::vector<double> ExternalScore::score_batch(std::span<const Matrix> xs) const {
  Lease lease(*this);
  return lease.get().score_batch(xs);
}

}  // namespace dtwcert
