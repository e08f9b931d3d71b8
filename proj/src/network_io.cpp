#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mop/errors.hpp"
#include "mop/network.hpp"

#ifndef MOP_DATA_DIR
#define MOP_DATA_DIR "data"
#endif

namespace mop {

namespace {

using nlohmann::json;

int line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Finds the source line of a value in already-validated JSON text by walking
// a path of object keys and array indices.
class Locator {
 public:
  explicit Locator(const std::string& text) : s_(text) {}

  int line_of(const std::vector<std::string>& path) {
    pos_ = 0;
    std::size_t found = 0;
    if (!seek(path, 0, found)) return 0;
    return line_at(s_, found);
  }

 private:
  void ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\') ++pos_;
      if (pos_ < s_.size()) out += s_[pos_++];
    }
    ++pos_;
    return out;
  }

  void skip_value() {
    ws();
    if (pos_ >= s_.size()) return;
    const char ch = s_[pos_];
    if (ch == '"') {
      string_token();
    } else if (ch == '{' || ch == '[') {
      const char close = ch == '{' ? '}' : ']';
      ++pos_;
      ws();
      if (pos_ < s_.size() && s_[pos_] == close) {
        ++pos_;
        return;
      }
      while (pos_ < s_.size()) {
        if (ch == '{') {
          ws();
          string_token();
          ws();
          ++pos_;  // colon
        }
        skip_value();
        ws();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        ++pos_;  // close
        return;
      }
    } else {
      while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != '}' && s_[pos_] != ']' &&
             !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      }
    }
  }

  bool seek(const std::vector<std::string>& path, std::size_t depth, std::size_t& found) {
    ws();
    if (depth == path.size()) {
      found = pos_;
      return true;
    }
    if (pos_ >= s_.size()) return false;
    const char ch = s_[pos_];
    if (ch != '{' && ch != '[') return false;
    ++pos_;
    ws();
    if (pos_ < s_.size() && (s_[pos_] == '}' || s_[pos_] == ']')) return false;
    for (long index = 0; pos_ < s_.size(); ++index) {
      bool match = false;
      if (ch == '{') {
        ws();
        const std::size_t key_pos = pos_;
        match = string_token() == path[depth];
        ws();
        ++pos_;
        if (match && depth + 1 == path.size()) {
          found = key_pos;
          return true;
        }
      } else {
        match = std::to_string(index) == path[depth];
      }
      if (match) return seek(path, depth + 1, found);
      skip_value();
      ws();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      return false;
    }
    return false;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::string pointer;
    for (const auto& p : path) pointer += "/" + p;
    Locator loc(text_);
    const int line = loc.line_of(path);
    std::string msg = "network schema error at " + (pointer.empty() ? std::string("/") : pointer);
    if (line > 0) msg += " (line " + std::to_string(line) + ")";
    throw ParseError(msg + ": " + what, line);
  }

  const json& member(const json& obj, std::vector<std::string> path, const std::string& key) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    path.push_back(key);
    if (it == obj.end()) {
      path.pop_back();
      fail(path, "missing required key '" + key + "'");
    }
    return *it;
  }

  double number(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  int integer(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  const json& array(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
  }

 private:
  const std::string& text_;
};

std::vector<std::string> extend(std::vector<std::string> path, const std::string& token) {
  path.push_back(token);
  return path;
}

std::vector<std::string> extend(std::vector<std::string> path, std::size_t index) {
  path.push_back(std::to_string(index));
  return path;
}

}  // namespace

ProfileSet read_profiles_csv(std::istream& is) {
  ProfileSet p;
  std::string line;
  int line_no = 0;
  int expected_hour = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("hour", 0) == 0) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> v;
    try {
      while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError("profiles line " + std::to_string(line_no) + ": bad number", line_no);
    }
    if (v.size() != 4) throw ParseError("profiles line " + std::to_string(line_no) + ": expected 4 columns", line_no);
    if (static_cast<int>(v[0]) != expected_hour) {
      throw ParseError("profiles line " + std::to_string(line_no) + ": hours must run 0, 1, 2, ...", line_no);
    }
    for (int k = 1; k < 4; ++k) {
      if (!(v[k] >= 0.0 && v[k] <= 1.0)) {
        throw ParseError("profiles line " + std::to_string(line_no) + ": multipliers must lie in [0, 1]", line_no);
      }
    }
    ++expected_hour;
    p.demand.push_back(v[1]);
    p.wind.push_back(v[2]);
    p.solar.push_back(v[3]);
  }
  if (p.empty()) throw ParseError("profiles file has no rows");
  return p;
}

ProfileSet load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profiles file " + path.string());
  return read_profiles_csv(in);
}

void write_profiles_csv(std::ostream& os, const ProfileSet& p) {
  os << "hour,demand,wind,solar\n";
  const auto old = os.precision(6);
  for (int t = 0; t < p.hours(); ++t) os << t << ',' << p.demand[t] << ',' << p.wind[t] << ',' << p.solar[t] << '\n';
  os.precision(old);
}

NetworkCase parse_network(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = line_at(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("network JSON syntax error (line " + std::to_string(line) + "): " + e.what(), line);
  }
  const Reader r(text);
  const std::vector<std::string> root;
  NetworkCase c;
  if (!doc.is_object()) r.fail(root, "expected an object");
  if (auto it = doc.find("name"); it != doc.end() && it->is_string()) c.name = it->get<std::string>();

  const json& base = r.member(doc, root, "base");
  c.base_kva = r.number(r.member(base, {"base"}, "kva"), {"base", "kva"});
  c.base_kv = r.number(r.member(base, {"base"}, "kv"), {"base", "kv"});
  if (!(c.base_kva > 0.0)) r.fail({"base", "kva"}, "must be positive");
  if (!(c.base_kv > 0.0)) r.fail({"base", "kv"}, "must be positive");
  c.slack = r.integer(r.member(doc, root, "slack"), {"slack"});

  const json& buses = r.array(r.member(doc, root, "buses"), {"buses"});
  for (std::size_t k = 0; k < buses.size(); ++k) {
    const auto path = extend({"buses"}, k);
    const json& b = buses[k];
    Bus bus;
    bus.id = r.integer(r.member(b, path, "id"), extend(path, "id"));
    bus.p_kw = r.number(r.member(b, path, "p_kw"), extend(path, "p_kw"));
    bus.q_kvar = r.number(r.member(b, path, "q_kvar"), extend(path, "q_kvar"));
    if (auto it = b.find("profile"); it != b.end()) {
      if (!it->is_string()) r.fail(extend(path, "profile"), "expected a string");
      try {
        bus.profile = profile_kind_from_string(it->get<std::string>());
      } catch (const ArgumentError&) {
        r.fail(extend(path, "profile"), "expected one of demand, wind, solar, none");
      }
    }
    if (auto it = b.find("gen_kw"); it != b.end()) bus.gen_kw = r.number(*it, extend(path, "gen_kw"));
    c.buses.push_back(bus);
  }

  const json& branches = r.array(r.member(doc, root, "branches"), {"branches"});
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto path = extend({"branches"}, k);
    const json& b = branches[k];
    Branch br;
    br.from = r.integer(r.member(b, path, "from"), extend(path, "from"));
    br.to = r.integer(r.member(b, path, "to"), extend(path, "to"));
    br.r_ohm = r.number(r.member(b, path, "r_ohm"), extend(path, "r_ohm"));
    br.x_ohm = r.number(r.member(b, path, "x_ohm"), extend(path, "x_ohm"));
    c.branches.push_back(br);
  }

  const json& terminals = r.array(r.member(doc, root, "terminals"), {"terminals"});
  for (std::size_t k = 0; k < terminals.size(); ++k) {
    c.terminals.push_back(r.integer(terminals[k], extend({"terminals"}, k)));
  }

  if (auto it = doc.find("profiles_csv"); it != doc.end()) {
    if (!it->is_string()) r.fail({"profiles_csv"}, "expected a path string");
    std::filesystem::path p = it->get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    c.profiles = load_profiles(p);
  }

  validate(c);
  return c;
}

NetworkCase load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open network file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  NetworkCase c = parse_network(buf.str(), path.parent_path());
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("MOP_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return MOP_DATA_DIR;
}

BundledCases bundled_cases() {
  const auto dir = data_dir();
  return {load_network(dir / "ieee33.json"), load_network(dir / "two_bus.json"), load_network(dir / "star.json")};
}

}  // namespace mop
