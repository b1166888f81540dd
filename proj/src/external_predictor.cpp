// Copyright 2026 The facts Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "facts/external_predictor.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>

#include "facts/graph.hpp"
#include "json.hpp"

namespace facts {

namespace {

// Channel over a pair of file descriptors (write_fd may equal read_fd).
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, pid_t child = -1)
      : read_fd_(read_fd), write_fd_(write_fd), child_(child) {}

  ~FdChannel() override {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
      ::kill(child_, SIGTERM);
      int status = 0;
      ::waitpid(child_, &status, 0);
    }
  }

  void write_line(const std::string& line) override {
    std::string buf = line + "\n";
    std::size_t sent = 0;
    while (sent < buf.size()) {
      ssize_t n = ::write(write_fd_, buf.data() + sent, buf.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error("E_CHANNEL",
                    std::string("write failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  bool read_line(std::string* line, int timeout_ms) override {
    for (;;) {
      auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        *line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        if (!line->empty() && line->back() == '\r') line->pop_back();
        return true;
      }
      if (eof_) return false;
      struct pollfd pfd = {read_fd_, POLLIN, 0};
      int ready = ::poll(&pfd, 1, timeout_ms);
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error("E_CHANNEL",
                    std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0)
        throw Error("E_CHANNEL", "timed out waiting for peer response");
      char chunk[4096];
      ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error("E_CHANNEL",
                    std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        eof_ = true;
        continue;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int read_fd_;
  int write_fd_;
  pid_t child_;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace

std::unique_ptr<LineChannel> open_process_channel(
    const std::vector<std::string>& argv) {
  if (argv.empty()) throw Error("E_CHANNEL", "empty command line");
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
    throw Error("E_CHANNEL", "pipe creation failed");
  pid_t pid = ::fork();
  if (pid < 0) throw Error("E_CHANNEL", "fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<FdChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> open_tcp_channel(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos)
    throw Error("E_CHANNEL", "address must be host:port");
  std::string host = address.substr(0, colon);
  std::string port = address.substr(colon + 1);

  struct addrinfo hints = {};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  struct addrinfo* result = nullptr;
  int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &result);
  if (rc != 0)
    throw Error("E_CHANNEL", "cannot resolve '" + address +
                                 "': " + gai_strerror(rc));
  int fd = -1;
  for (struct addrinfo* ai = result; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) throw Error("E_CHANNEL", "cannot connect to '" + address + "'");
  return std::make_unique<FdChannel>(fd, fd);
}

ExternalPredictor::ExternalPredictor(std::unique_ptr<LineChannel> channel,
                                     int input_dim, int timeout_ms)
    : channel_(std::move(channel)),
      input_dim_(input_dim),
      timeout_ms_(timeout_ms) {}

double ExternalPredictor::score(const Eigen::VectorXd& x) const {
  return score_batch({x})[0];
}

std::vector<double> ExternalPredictor::score_batch(
    const std::vector<Eigen::VectorXd>& xs) const {
  std::map<long, std::size_t> pending;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (input_dim_ >= 0 && xs[i].size() != input_dim_)
      throw Error("E_PREDICT", "input dimension mismatch");
    nlohmann::json req;
    long id = next_id_++;
    req["id"] = id;
    nlohmann::json vec = nlohmann::json::array();
    for (int k = 0; k < xs[i].size(); ++k) vec.push_back(xs[i][k]);
    req["x"] = vec;
    channel_->write_line(req.dump());
    pending[id] = i;
  }

  std::vector<double> scores(xs.size(), 0.0);
  std::string line;
  while (!pending.empty()) {
    if (!channel_->read_line(&line, timeout_ms_))
      throw Error("E_CHANNEL", "peer closed the stream with " +
                                   std::to_string(pending.size()) +
                                   " responses outstanding");
    ++lines_read_;
    if (line.empty()) continue;
    nlohmann::json resp = nlohmann::json::parse(line, nullptr, false);
    if (resp.is_discarded() || !resp.contains("id") || !resp.contains("score"))
      throw Error("E_PROTOCOL", "malformed response on line " +
                                    std::to_string(lines_read_));
    long id = resp["id"].get<long>();
    auto it = pending.find(id);
    if (it == pending.end())
      throw Error("E_PROTOCOL", "unexpected response id " + std::to_string(id) +
                                    " on line " + std::to_string(lines_read_));
    scores[it->second] = resp["score"].get<double>();
    pending.erase(it);
  }
  return scores;
}

}  // namespace facts
