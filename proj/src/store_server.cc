#include "lethe/store_server.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "json.hpp"

namespace lethe {
namespace {

using nlohmann::ordered_json;

const std::string& Unauthorized() {
  static const std::string kLine = R"({"status":"error","code":"unauthorized"})";
  return kLine;
}
const std::string& BadRequest() {
  static const std::string kLine = R"({"status":"error","code":"bad_request"})";
  return kLine;
}
const std::string& Unavailable() {
  static const std::string kLine = R"({"status":"error","code":"unavailable"})";
  return kLine;
}

bool WriteAll(int fd, const std::string& data) {
  size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<size_t>(n);
  }
  return true;
}

// Reads up to and excluding '\n'; false on EOF before a full line.
bool ReadLine(int fd, std::string& buffer, std::string& line) {
  while (true) {
    const size_t nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line.assign(buffer, 0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<size_t>(n));
    if (buffer.size() > (64u << 20)) return false;
  }
}

}  // namespace

std::string HandleRequestLine(Store& store, const std::string& line) {
  ordered_json req;
  try {
    req = ordered_json::parse(line);
  } catch (const ordered_json::parse_error&) {
    return BadRequest();
  }
  auto field = [&req](const char* name) -> const std::string* {
    const auto it = req.find(name);
    if (it == req.end() || !it->is_string()) return nullptr;
    return it->get_ptr<const std::string*>();
  };
  if (!req.is_object()) return BadRequest();
  const std::string* op = field("op");
  const std::string* token = field("token");
  if (!op || !token) return BadRequest();

  try {
    if (*op == "put") {
      const std::string* content = field("content");
      if (!content || content->empty() || token->empty()) return BadRequest();
      ordered_json resp;
      resp["status"] = "ok";
      resp["post_id"] = store.Put(*content, *token);
      return resp.dump();
    }
    const std::string* post_id = field("post_id");
    if (!post_id) return BadRequest();
    if (*op == "get") {
      ordered_json resp;
      resp["status"] = "ok";
      const auto content = store.Get(*post_id, *token);
      resp["content"] = content ? ordered_json(*content) : ordered_json(nullptr);
      return resp.dump();
    }
    if (*op == "delete") {
      return store.Delete(*post_id, *token) ? std::string(R"({"status":"ok"})") : Unauthorized();
    }
  } catch (const StorageError&) {
    return Unavailable();
  } catch (const std::invalid_argument&) {
    return BadRequest();
  }
  return BadRequest();
}

StoreServer::~StoreServer() { Stop(); }

void StoreServer::Start(uint16_t port, bool any_address) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(any_address ? INADDR_ANY : INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listen_fd_, 128) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("cannot listen on port " + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { AcceptLoop(); });
}

void StoreServer::AcceptLoop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard lock(clients_mu_);
    if (!running_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    std::thread([this, fd] { Serve(fd); }).detach();
  }
}

void StoreServer::Serve(int fd) {
  std::string buffer;
  std::string line;
  while (ReadLine(fd, buffer, line)) {
    if (!WriteAll(fd, HandleRequestLine(store_, line) + "\n")) break;
  }
  std::lock_guard lock(clients_mu_);
  client_fds_.erase(std::find(client_fds_.begin(), client_fds_.end(), fd));
  ::close(fd);
  clients_cv_.notify_all();
}

void StoreServer::Stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  // Connection threads own their sockets; wake them and wait for exit.
  std::unique_lock lock(clients_mu_);
  for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  clients_cv_.wait(lock, [this] { return client_fds_.empty(); });
  listen_fd_ = -1;
}

StoreClient::StoreClient(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw std::runtime_error("cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const bool ok = fd_ >= 0 && ::connect(fd_, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    if (fd_ >= 0) ::close(fd_);
    throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port));
  }
}

StoreClient::~StoreClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::string StoreClient::Call(const std::string& request_line) {
  if (!WriteAll(fd_, request_line + "\n")) throw std::runtime_error("send failed");
  std::string line;
  if (!ReadLine(fd_, buffer_, line)) throw std::runtime_error("connection closed");
  return line;
}

}  // namespace lethe
