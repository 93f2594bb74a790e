#include "lethe/store_server.h"

#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "json.hpp"

namespace lethe {
namespace {

using nlohmann::json;

constexpr Seconds kStart = 1'700'000'000;
const std::string kNull = R"({"status":"ok","content":null})";
const std::string kUnauthorized = R"({"status":"error","code":"unauthorized"})";

std::string PutLine(const std::string& content, const std::string& token) {
  return json{{"op", "put"}, {"content", content}, {"token", token}}.dump();
}
std::string GetLine(const std::string& id, const std::string& token) {
  return json{{"op", "get"}, {"post_id", id}, {"token", token}}.dump();
}
std::string DeleteLine(const std::string& id, const std::string& token) {
  return json{{"op", "delete"}, {"post_id", id}, {"token", token}}.dump();
}

class WireTest : public ::testing::Test {
 protected:
  WireTest()
      : clock_(std::make_shared<ManualClock>(kStart)),
        store_(StoreOptions{BuildMechanism({0.9, 3600.0, 30 * kSecondsPerDay}), 3, kDefaultCoverage,
                            std::nullopt},
               clock_) {}

  std::string Put(const std::string& content, const std::string& token) {
    const auto resp = json::parse(HandleRequestLine(store_, PutLine(content, token)));
    EXPECT_EQ(resp.at("status"), "ok");
    return resp.at("post_id").get<std::string>();
  }

  Seconds FirstHidden(const std::string& id) {
    return store_.ScheduleOf(id)->toggles().front();
  }

  std::shared_ptr<ManualClock> clock_;
  Store store_;
};

TEST_F(WireTest, PutGetDeleteShapes) {
  const std::string put = HandleRequestLine(store_, PutLine("hi \"there\"", "tok"));
  const auto id = json::parse(put).at("post_id").get<std::string>();
  EXPECT_EQ(put, R"({"status":"ok","post_id":")" + id + "\"}");
  EXPECT_EQ(HandleRequestLine(store_, GetLine(id, "other")),
            R"({"status":"ok","content":"hi \"there\""})");
  EXPECT_EQ(HandleRequestLine(store_, DeleteLine(id, "tok")), R"({"status":"ok"})");
}

TEST_F(WireTest, NullsAreByteIdentical) {
  const auto hidden = Put("a", "owner");
  const auto deleted = Put("b", "owner");
  HandleRequestLine(store_, DeleteLine(deleted, "owner"));
  clock_->Set(FirstHidden(hidden));
  ASSERT_EQ(store_.Get(hidden, "x"), std::nullopt);

  std::set<std::string> responses;
  responses.insert(HandleRequestLine(store_, GetLine(hidden, "stranger")));
  responses.insert(HandleRequestLine(store_, GetLine(deleted, "stranger")));
  responses.insert(HandleRequestLine(store_, GetLine(deleted, "owner")));
  responses.insert(HandleRequestLine(store_, GetLine("p0123456789abcdef", "stranger")));
  responses.insert(HandleRequestLine(store_, GetLine("", "stranger")));
  ASSERT_EQ(responses.size(), 1u);
  EXPECT_EQ(*responses.begin(), kNull);
  // The owner still sees the hidden post.
  EXPECT_NE(HandleRequestLine(store_, GetLine(hidden, "owner")), kNull);
}

TEST_F(WireTest, FailedDeletesAreByteIdentical) {
  const auto id = Put("a", "owner");
  const auto wrong = HandleRequestLine(store_, DeleteLine(id, "thief"));
  const auto unknown = HandleRequestLine(store_, DeleteLine("pffffffffffffffff", "owner"));
  EXPECT_EQ(HandleRequestLine(store_, DeleteLine(id, "owner")), R"({"status":"ok"})");
  const auto twice = HandleRequestLine(store_, DeleteLine(id, "owner"));
  EXPECT_EQ(wrong, kUnauthorized);
  EXPECT_EQ(unknown, kUnauthorized);
  EXPECT_EQ(twice, kUnauthorized);
}

TEST_F(WireTest, MalformedRequests) {
  const std::string bad = R"({"status":"error","code":"bad_request"})";
  for (const std::string line : {"", "nonsense", "[1,2]", R"({"op":"put","content":"x"})",
                                 R"({"op":"put","content":"","token":"t"})",
                                 R"({"op":"get","post_id":5,"token":"t"})", R"({"op":"scan","token":"t"})",
                                 R"({"op":"update_ts","post_id":"x","token":"t"})"}) {
    EXPECT_EQ(HandleRequestLine(store_, line), bad) << line;
  }
}

// Random interleavings of hidden, deleted and unknown reads all answer the
// same bytes.
TEST_F(WireTest, IndistinguishabilityFuzz) {
  std::mt19937 rng(4);
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back(Put("c" + std::to_string(i), "o" + std::to_string(i)));
  for (int i = 0; i < 40; i += 3) HandleRequestLine(store_, DeleteLine(ids[i], "o" + std::to_string(i)));
  for (int step = 0; step < 2000; ++step) {
    clock_->Advance(static_cast<Seconds>(rng() % 7200));
    const int pick = static_cast<int>(rng() % 50);
    const bool unknown = pick >= 40;
    const std::string id = unknown ? "p" + std::to_string(rng()) : ids[pick];
    const std::string resp = HandleRequestLine(store_, GetLine(id, "stranger"));
    const bool gone = unknown || pick % 3 == 0;
    if (gone) {
      ASSERT_EQ(resp, kNull);
    } else {
      ASSERT_TRUE(resp == kNull || resp == R"({"status":"ok","content":"c)" + std::to_string(pick) + "\"}")
          << resp;
    }
  }
}

TEST(ServerTest, TcpRoundTripAndConcurrentClients) {
  auto clock = std::make_shared<ManualClock>(kStart);
  Store store(StoreOptions{BuildMechanism({0.9, 3600.0, 30 * kSecondsPerDay}), 8, kDefaultCoverage,
                           std::nullopt},
              clock);
  StoreServer server(store);
  server.Start(0);
  ASSERT_NE(server.port(), 0);

  StoreClient client("127.0.0.1", server.port());
  const auto put = json::parse(client.Call(PutLine("over the wire", "tok")));
  const auto id = put.at("post_id").get<std::string>();
  EXPECT_EQ(client.Call(GetLine(id, "x")), R"({"status":"ok","content":"over the wire"})");
  EXPECT_EQ(client.Call("garbage"), R"({"status":"error","code":"bad_request"})");

  constexpr int kClients = 8, kOps = 300;
  std::vector<std::thread> pool;
  std::atomic<int> failures{0};
  for (int c = 0; c < kClients; ++c) {
    pool.emplace_back([&, c] {
      StoreClient mine("127.0.0.1", server.port());
      const std::string token = "t" + std::to_string(c);
      std::vector<std::string> own;
      for (int i = 0; i < kOps; ++i) {
        if (i % 3 == 0) {
          const auto r = json::parse(mine.Call(PutLine("m" + std::to_string(i), token)));
          own.push_back(r.at("post_id").get<std::string>());
        } else if (i % 3 == 1) {
          const auto r = mine.Call(GetLine(own.back(), token));
          if (r.find("\"m") == std::string::npos) ++failures;
        } else if (i % 30 == 2) {
          if (mine.Call(DeleteLine(own.back(), token)) != R"({"status":"ok"})") ++failures;
          if (mine.Call(GetLine(own.back(), token)) != kNull) ++failures;
          own.push_back(json::parse(mine.Call(PutLine("again", token))).at("post_id").get<std::string>());
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  EXPECT_EQ(failures.load(), 0);
  server.Stop();
  EXPECT_THROW(StoreClient("127.0.0.1", server.port()).Call(GetLine(id, "x")), std::runtime_error);
}

TEST(ServerTest, StopWithIdleClientConnected) {
  auto clock = std::make_shared<ManualClock>(kStart);
  Store store(StoreOptions{BuildMechanism({0.9, 3600.0, 30 * kSecondsPerDay}), 8, kDefaultCoverage,
                           std::nullopt},
              clock);
  StoreServer server(store);
  server.Start(0);
  StoreClient idle("127.0.0.1", server.port());
  server.Stop();  // must not hang on the idle connection
  SUCCEED();
}

}  // namespace
}  // namespace lethe
