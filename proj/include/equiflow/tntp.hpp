#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "network.hpp"

namespace equiflow {

namespace tntp_detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last) return std::nullopt;
  return v;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Metadata {
  std::map<std::string, std::string> fields;
  bool ended = false;
};

// Reads <KEY> value lines up to <END OF METADATA>; returns the body lines with
// their 1-based line numbers, comments stripped.
// Trips files may omit the header entirely (required = false).
inline Metadata read_header(std::istream& in, std::vector<std::pair<int, std::string>>& body, bool required = true) {
  Metadata md;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find('~'); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    if (!md.ended && !required && md.fields.empty() && line.front() != '<') md.ended = true;
    if (!md.ended) {
      if (line.front() != '<') throw Error(Errc::MalformedHeader, "line " + std::to_string(lineno) + ": data before <END OF METADATA>");
      auto close = line.find('>');
      if (close == std::string::npos) throw Error(Errc::MalformedHeader, "line " + std::to_string(lineno) + ": unterminated tag");
      std::string key = line.substr(1, close - 1);
      if (key == "END OF METADATA") {
        md.ended = true;
        continue;
      }
      md.fields[key] = trim(line.substr(close + 1));
    } else {
      body.emplace_back(lineno, line);
    }
  }
  if (!md.ended) throw Error(Errc::MalformedHeader, "missing <END OF METADATA>");
  return md;
}

inline std::optional<long> header_int(const Metadata& md, const std::string& key, bool required) {
  auto it = md.fields.find(key);
  if (it == md.fields.end()) {
    if (required) throw Error(Errc::MalformedHeader, "missing <" + key + ">");
    return std::nullopt;
  }
  auto v = to_double(it->second);
  if (!v || *v < 0 || *v != static_cast<double>(static_cast<long>(*v)))
    throw Error(Errc::MalformedHeader, "<" + key + "> is not a non-negative integer: '" + it->second + "'");
  return static_cast<long>(*v);
}

}  // namespace tntp_detail

struct NetParseOptions {
  CostFamily family = CostFamily::BPR;
};

inline Network parse_tntp_net(std::istream& in, const NetParseOptions& opt = {}) {
  using namespace tntp_detail;
  std::vector<std::pair<int, std::string>> body;
  Metadata md = read_header(in, body);
  const long n = *header_int(md, "NUMBER OF NODES", true);
  const long m = *header_int(md, "NUMBER OF LINKS", true);
  const long first_thru = header_int(md, "FIRST THRU NODE", false).value_or(1);

  std::vector<Link> links;
  links.reserve(static_cast<std::size_t>(m));
  for (auto& [lineno, text] : body) {
    std::istringstream ss(text);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (!tok.empty() && tok.back() == ";") tok.pop_back();
    else if (!tok.empty() && tok.back().back() == ';') tok.back().pop_back();
    if (tok.size() != 10)
      throw Error(Errc::FieldCountMismatch,
                  "line " + std::to_string(lineno) + ": expected 10 fields, found " + std::to_string(tok.size()));
    double v[10];
    for (int i = 0; i < 10; ++i) {
      auto d = to_double(tok[i]);
      if (!d) throw Error(Errc::FieldCountMismatch, "line " + std::to_string(lineno) + ": field " +
                                                        std::to_string(i + 1) + " is not numeric: '" + tok[i] + "'");
      v[i] = *d;
    }
    Link l;
    l.tail = static_cast<int>(v[0]) - 1;
    l.head = static_cast<int>(v[1]) - 1;
    if (v[0] < 1 || v[0] > n || v[1] < 1 || v[1] > n)
      throw Error(Errc::UnknownNode, "line " + std::to_string(lineno) + ": node id outside 1.." + std::to_string(n));
    l.capacity = v[2];
    l.length = v[3];
    l.free_flow_time = v[4];
    l.rho = v[5];
    l.power = v[6];
    l.speed = v[7];
    l.toll = v[8];
    l.link_type = static_cast<int>(v[9]);
    l.family = opt.family;
    if (!(l.capacity > 0) || !(l.free_flow_time > 0))
      throw Error(Errc::NonPositiveCapacityOrTime, "line " + std::to_string(lineno) + ": capacity " + fmt(l.capacity) +
                                                       ", free-flow time " + fmt(l.free_flow_time));
    if (l.tail == l.head) throw Error(Errc::SelfLoop, "line " + std::to_string(lineno) + ": self-loop");
    links.push_back(l);
  }
  if (static_cast<long>(links.size()) != m)
    throw Error(Errc::MalformedHeader, "<NUMBER OF LINKS> says " + std::to_string(m) + " but " +
                                           std::to_string(links.size()) + " records were read");
  std::vector<char> through(static_cast<std::size_t>(n), 1);
  for (long v = 1; v < first_thru && v <= n; ++v) through[v - 1] = 0;
  return Network(static_cast<int>(n), std::move(links), std::move(through));
}

inline Network parse_tntp_net(const std::string& text, const NetParseOptions& opt = {}) {
  std::istringstream in(text);
  return parse_tntp_net(in, opt);
}

// node_count < 0 falls back to <NUMBER OF ZONES> when present.
inline TripTable parse_tntp_trips(std::istream& in, int node_count = -1) {
  using namespace tntp_detail;
  std::vector<std::pair<int, std::string>> body;
  Metadata md = read_header(in, body, false);
  long limit = node_count;
  if (limit < 0) limit = header_int(md, "NUMBER OF ZONES", false).value_or(-1);

  TripTable trips;
  auto check_id = [&](double id, int lineno) {
    if (id != static_cast<double>(static_cast<long>(id)) || id < 1 || (limit >= 0 && id > limit))
      throw Error(Errc::UnknownNode, "line " + std::to_string(lineno) + ": node id " + fmt(id));
    return static_cast<int>(id) - 1;
  };
  int origin = -1;
  for (auto& [lineno, text] : body) {
    std::string s;
    for (char c : text) {
      if (c == ';') s += ' ';
      else if (c == ':') s += " : ";
      else s += c;
    }
    std::istringstream ss(s);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    std::size_t i = 0;
    while (i < tok.size()) {
      if (tok[i] == "Origin") {
        if (i + 1 >= tok.size()) throw Error(Errc::FieldCountMismatch, "line " + std::to_string(lineno) + ": Origin without id");
        auto id = to_double(tok[i + 1]);
        if (!id) throw Error(Errc::FieldCountMismatch, "line " + std::to_string(lineno) + ": bad origin id");
        origin = check_id(*id, lineno);
        i += 2;
        continue;
      }
      if (origin < 0) throw Error(Errc::MalformedHeader, "line " + std::to_string(lineno) + ": demand before any Origin");
      if (i + 2 >= tok.size() || tok[i + 1] != ":")
        throw Error(Errc::FieldCountMismatch, "line " + std::to_string(lineno) + ": expected 'dest : flow'");
      auto dest = to_double(tok[i]);
      auto flow = to_double(tok[i + 2]);
      if (!dest || !flow) throw Error(Errc::FieldCountMismatch, "line " + std::to_string(lineno) + ": non-numeric entry");
      int d = check_id(*dest, lineno);
      if (*flow < 0) throw Error(Errc::NegativeDemand, "line " + std::to_string(lineno) + ": flow " + fmt(*flow));
      trips.add(origin, d, *flow);
      i += 3;
    }
  }
  return trips;
}

inline TripTable parse_tntp_trips(const std::string& text, int node_count = -1) {
  std::istringstream in(text);
  return parse_tntp_trips(in, node_count);
}

inline Network read_tntp_net(const std::string& path, const NetParseOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open " + path);
  return parse_tntp_net(in, opt);
}

inline TripTable read_tntp_trips(const std::string& path, int node_count = -1) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open " + path);
  return parse_tntp_trips(in, node_count);
}

inline std::string serialize_tntp_net(const Network& net) {
  using tntp_detail::fmt;
  int first_thru = 0;
  while (first_thru < net.num_nodes() && !net.is_through(first_thru)) ++first_thru;
  for (int v = first_thru; v < net.num_nodes(); ++v)
    if (!net.is_through(v)) throw Error(Errc::InvalidArgument, "non-through nodes must form a prefix for TNTP output");
  std::string out;
  out += "<NUMBER OF ZONES> " + std::to_string(net.num_nodes()) + "\n";
  out += "<NUMBER OF NODES> " + std::to_string(net.num_nodes()) + "\n";
  out += "<FIRST THRU NODE> " + std::to_string(first_thru + 1) + "\n";
  out += "<NUMBER OF LINKS> " + std::to_string(net.num_links()) + "\n";
  out += "<END OF METADATA>\n\n~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;\n";
  for (const Link& l : net.links()) {
    out += "\t" + std::to_string(l.tail + 1) + "\t" + std::to_string(l.head + 1) + "\t" + fmt(l.capacity) + "\t" +
           fmt(l.length) + "\t" + fmt(l.free_flow_time) + "\t" + fmt(l.rho) + "\t" + fmt(l.power) + "\t" +
           fmt(l.speed) + "\t" + fmt(l.toll) + "\t" + std::to_string(l.link_type) + "\t;\n";
  }
  return out;
}

inline std::string serialize_tntp_trips(const TripTable& trips, int zones) {
  using tntp_detail::fmt;
  std::string out;
  out += "<NUMBER OF ZONES> " + std::to_string(zones) + "\n";
  out += "<TOTAL OD FLOW> " + fmt(trips.total()) + "\n";
  out += "<END OF METADATA>\n";
  for (int o : trips.origins()) {
    out += "\n\nOrigin \t" + std::to_string(o + 1) + "\n";
    int k = 0;
    for (auto [d, v] : trips.from(o)) {
      out += "    " + std::to_string(d + 1) + " : " + fmt(v) + ";";
      if (++k % 5 == 0) out += "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace equiflow
