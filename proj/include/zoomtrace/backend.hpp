#pragma once

// Decision backends: given the system prompt and the message history
// (text plus view images), produce the next model-authored turn.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "zoomtrace/raster.hpp"
#include "zoomtrace/trajectory.hpp"

namespace zt::agent {

struct Message {
  enum class Role { system, user, assistant, tool };
  Role role = Role::user;
  std::string text;
  std::string image_view;  // view id of an attached image, empty for none
  bool operator==(const Message&) const = default;
};

const char* to_string(Message::Role r);

struct BackendContext {
  traj::TaskKind task = traj::TaskKind::count;
  std::string question;
  std::string target_label;
  // Label colours of a synthetic scene; empty for rasters.
  std::map<std::string, raster::Rgb> palette;
  // Pixels of a registered view, or nullptr.
  std::function<const raster::Image*(const std::string&)> image;
};

struct TransportError : public std::runtime_error {
  int attempts = 0;
  TransportError(const std::string& msg, int n) : std::runtime_error(msg), attempts(n) {}
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  // Called once per episode before the first turn.
  virtual void reset(std::uint64_t seed) { (void)seed; }
  virtual std::string next_turn(const std::vector<Message>& history, const BackendContext& ctx) = 0;
  // Fresh instance for a concurrent episode.
  virtual std::unique_ptr<Backend> clone() const = 0;
};

// Returns scripted turns in order; an exhausted script yields empty turns.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::vector<std::string> turns) : turns_(std::move(turns)) {}
  // Either a JSON array of strings or plain text with turns separated by a
  // line holding only "%%".
  static ReplayBackend from_text(const std::string& text);
  static ReplayBackend from_file(const std::string& path);

  std::string name() const override { return "replay"; }
  void reset(std::uint64_t) override { next_ = 0; }
  std::string next_turn(const std::vector<Message>&, const BackendContext&) override;
  std::unique_ptr<Backend> clone() const override { return std::make_unique<ReplayBackend>(turns_); }
  const std::vector<std::string>& turns() const { return turns_; }

 private:
  std::vector<std::string> turns_;
  std::size_t next_ = 0;
};

// Quadtree sweep over the global view that detects synthetic primitives by
// exact colour. It never sees ground truth.
struct HeuristicOptions {
  bool dedup = true;
  double dedup_iou = 0.5;
  bool shuffle = false;  // visit quadrants in a seeded random order
};

class HeuristicBackend : public Backend {
 public:
  explicit HeuristicBackend(HeuristicOptions o = {}) : opt_(o) {}
  std::string name() const override { return "heuristic"; }
  void reset(std::uint64_t seed) override;
  std::string next_turn(const std::vector<Message>& history, const BackendContext& ctx) override;
  std::unique_ptr<Backend> clone() const override { return std::make_unique<HeuristicBackend>(opt_); }

  // Quadrant rois in the global view.
  static const std::vector<geo::NormBox>& quadrants();

 private:
  struct Found {
    std::string label;
    geo::NormBox local;
    geo::NormBox global;
    std::string view_id;
  };
  std::string plan_turn(const BackendContext& ctx);
  std::string visit_turn(const std::vector<Message>& history, const BackendContext& ctx);

  HeuristicOptions opt_;
  std::vector<std::size_t> order_{0, 1, 2, 3};
  std::size_t visited_ = 0;
  std::vector<Found> found_;
};

struct RemoteOptions {
  std::string endpoint;  // e.g. http://host:port/v1/chat/completions
  std::string model;
  std::string api_key;  // sent as a bearer token when set
  int retries = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{120};
  double temperature = 0.0;
  int max_tokens = 4096;
};

inline constexpr const char* kApiKeyEnv = "ZOOMTRACE_API_KEY";

// Chat-completions style HTTP client; images travel as base64 PNG data URLs.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteOptions o) : opt_(std::move(o)) {}
  std::string name() const override { return "remote"; }
  std::string next_turn(const std::vector<Message>& history, const BackendContext& ctx) override;
  std::unique_ptr<Backend> clone() const override { return std::make_unique<RemoteBackend>(opt_); }
  const RemoteOptions& options() const { return opt_; }

  // Request body for a history; exposed for tests.
  static std::string request_body(const RemoteOptions& o, const std::vector<Message>& history,
                                  const BackendContext& ctx);

 private:
  RemoteOptions opt_;
};

}  // namespace zt::agent
