#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zoomtrace/backend.hpp"

namespace zt::agent {

const char* to_string(Message::Role r) {
  switch (r) {
    case Message::Role::system: return "system";
    case Message::Role::user: return "user";
    case Message::Role::assistant: return "assistant";
    case Message::Role::tool: return "tool";
  }
  return "?";
}

ReplayBackend ReplayBackend::from_text(const std::string& text) {
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && text[start] == '[') {
    return ReplayBackend(nlohmann::json::parse(text).get<std::vector<std::string>>());
  }
  std::vector<std::string> turns;
  std::string cur;
  std::istringstream in(text);
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    if (line == "%%" || line == "%%\r") {
      turns.push_back(cur);
      cur.clear();
      any = false;
      continue;
    }
    if (any) cur += '\n';
    cur += line;
    any = true;
  }
  if (any) turns.push_back(cur);
  return ReplayBackend(std::move(turns));
}

ReplayBackend ReplayBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read replay script '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::string ReplayBackend::next_turn(const std::vector<Message>&, const BackendContext&) {
  if (next_ >= turns_.size()) return "";
  return turns_[next_++];
}

}  // namespace zt::agent
