#ifndef LETHE_STORE_SERVER_H_
#define LETHE_STORE_SERVER_H_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lethe/store.h"

namespace lethe {

// Handles one request line of the newline-delimited JSON protocol and
// returns the response line (without the trailing newline).
//   {"op":"put","content":s,"token":s}     -> {"status":"ok","post_id":s}
//   {"op":"get","post_id":s,"token":s}     -> {"status":"ok","content":s|null}
//   {"op":"delete","post_id":s,"token":s}  -> {"status":"ok"}
// Failed deletes of any kind answer {"status":"error","code":"unauthorized"};
// malformed requests answer code "bad_request", storage faults "unavailable".
std::string HandleRequestLine(Store& store, const std::string& line);

// TCP front end: one thread per connection.
class StoreServer {
 public:
  explicit StoreServer(Store& store) : store_(store) {}
  ~StoreServer();
  StoreServer(const StoreServer&) = delete;
  StoreServer& operator=(const StoreServer&) = delete;

  // Binds 127.0.0.1:port (0 picks a free port) unless `any_address`.
  void Start(uint16_t port, bool any_address = false);
  uint16_t port() const { return port_; }
  void Stop();

 private:
  void AcceptLoop();
  void Serve(int fd);

  Store& store_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex clients_mu_;
  std::condition_variable clients_cv_;
  std::vector<int> client_fds_;
};

// Blocking line-oriented client used by tests and tooling.
class StoreClient {
 public:
  StoreClient(const std::string& host, uint16_t port);
  ~StoreClient();
  StoreClient(const StoreClient&) = delete;
  StoreClient& operator=(const StoreClient&) = delete;

  // Sends one line and returns the raw response line.
  std::string Call(const std::string& request_line);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace lethe

#endif  // LETHE_STORE_SERVER_H_
