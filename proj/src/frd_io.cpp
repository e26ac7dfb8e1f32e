// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/frd_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "gelforce/error.hpp"
#include "text.hpp"

namespace gelforce {

namespace {

constexpr int kFloatWidth = 12;

// 1-based, inclusive column range of `line`, empty when past the end.
std::string_view columns(std::string_view line, std::size_t first, std::size_t last) {
  if (line.size() < first) return {};
  return line.substr(first - 1, std::min(line.size(), last) - (first - 1));
}

class FrdReader {
 public:
  explicit FrdReader(std::istream& in) : in_(in) {}

  FrdResult read() {
    while (next()) {
      const std::string_view l = line_;
      if (text::trim(l).empty()) continue;
      if (record(l) < 0) {
        result_.warnings.push_back("line " + std::to_string(lineno_) + ": record outside a block skipped");
        continue;
      }
      const auto key = text::parse_int(columns(l, 1, 5));
      const char code = l.size() >= 6 ? l[5] : ' ';
      if (text::trim(l) == "9999" || (key && *key == 9999)) break;
      if (!key) {
        result_.warnings.push_back("line " + std::to_string(lineno_) + ": unrecognized line skipped");
        continue;
      }
      if (*key == 2 && code == 'C') {
        read_nodes(format_of(l));
      } else if (*key == 100 && code == 'C') {
        read_result(l);
      } else if (*key == 3 && code == 'C') {
        skip_block("element");
      } else if (*key == 1) {
        continue;  // header, user and parameter records
      } else {
        result_.warnings.push_back("line " + std::to_string(lineno_) + ": unknown block " +
                                   std::string(text::trim(columns(l, 1, 6))) + " skipped");
        skip_block("unknown");
      }
    }
    return std::move(result_);
  }

 private:
  bool next() {
    if (!std::getline(in_, line_)) return false;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    ++lineno_;
    return true;
  }

  // Record key in columns 2-3 (" -1", " -2", ...), or nullopt.
  static std::optional<int> record_key(std::string_view l) {
    const auto k = text::parse_int(columns(l, 1, 3));
    if (!k) return std::nullopt;
    return static_cast<int>(*k);
  }
  static int record(std::string_view l) { return record_key(l).value_or(0); }

  static int format_of(std::string_view l) {
    const auto f = text::parse_int(columns(l, 74, 75));
    return f ? static_cast<int>(*f) : 1;
  }

  [[noreturn]] void truncated(const std::string& what) {
    throw ParseError("truncated " + what + " block", lineno_ + 1, 0);
  }

  void skip_block(const std::string& what) {
    while (next()) {
      if (record(line_) == -3) return;
    }
    truncated(what);
  }

  int id_width(int format) const {
    if (format == 0) return 5;
    if (format == 1) return 10;
    throw ParseError("binary FRD blocks are not supported", lineno_, 74);
  }

  int parse_id(std::string_view l, int width) {
    const auto id = text::parse_int(columns(l, 4, 3 + width));
    if (!id || *id <= 0) throw ParseError("invalid node id", lineno_, 4);
    return static_cast<int>(*id);
  }

  // Consecutive 12-character floats starting at column `first`.
  void parse_floats(std::string_view l, std::size_t first, std::vector<double>& out) {
    for (std::size_t c = first; c <= l.size(); c += kFloatWidth) {
      const std::string_view f = columns(l, c, c + kFloatWidth - 1);
      if (text::trim(f).empty()) break;
      const auto v = text::parse_double(f);
      if (!v || !std::isfinite(*v)) throw ParseError("non-numeric field '" + std::string(text::trim(f)) + "'", lineno_, c);
      out.push_back(*v);
    }
  }

  void read_nodes(int format) {
    const int width = id_width(format);
    std::vector<double> v;
    while (next()) {
      const int key = record(line_);
      if (key == -3) return;
      if (key != -1) continue;
      const int id = parse_id(line_, width);
      v.clear();
      parse_floats(line_, 4 + width, v);
      if (v.size() < 3) throw ParseError("node record needs three coordinates", lineno_, 4 + width);
      result_.nodes[id] = Vec3(v[0], v[1], v[2]);
    }
    truncated("node");
  }

  void read_result(std::string_view header) {
    const std::size_t header_line = lineno_;
    NodalFieldSet set;
    const int format = format_of(header);
    const int width = id_width(format);
    if (const auto t = text::parse_double(columns(header, 13, 24))) set.time = *t;
    if (const auto s = text::parse_int(columns(header, 59, 63))) set.step = static_cast<int>(*s);
    const auto declared = text::parse_int(columns(header, 25, 36));

    bool have_name = false;
    long long records = 0;
    int pending = -1;  // node id whose values are still being collected
    std::size_t pending_line = 0;
    std::vector<double> v;
    auto flush = [&] {
      if (pending < 0) return;
      ++records;
      if (set.name == "DISP" || set.name == "FORC") {
        if (v.size() < 3) throw ParseError(set.name + " record needs three components", pending_line, 0);
        set.values[pending] = Vec3(v[0], v[1], v[2]);
      }
      pending = -1;
    };
    while (next()) {
      const int key = record(line_);
      if (key == -4) {
        set.name = std::string(text::trim(columns(line_, 6, 13)));
        have_name = true;
      } else if (key == -5) {
        continue;
      } else if (key == -1) {
        flush();
        pending = parse_id(line_, width);
        pending_line = lineno_;
        v.clear();
        parse_floats(line_, 4 + width, v);
      } else if (key == -2) {
        if (pending < 0) throw ParseError("continuation record without a node record", lineno_, 2);
        parse_floats(line_, 4 + width, v);
      } else if (key == -3) {
        flush();
        finish(std::move(set), have_name, declared, records, header_line);
        return;
      }
    }
    truncated("result");
  }

  void finish(NodalFieldSet set, bool have_name, std::optional<long long> declared, long long records,
              std::size_t header_line) {
    if (!have_name) throw ParseError("result block without a -4 field record", header_line, 0);
    if (declared && *declared != records) {
      throw ParseError("truncated result block: declares " + std::to_string(*declared) + " nodes but has " +
                           std::to_string(records),
                       header_line, 25);
    }
    if (set.name != "DISP" && set.name != "FORC") {
      result_.warnings.push_back("line " + std::to_string(header_line) + ": result block " + set.name +
                                 " skipped");
      return;
    }
    result_.fields.push_back(std::move(set));
  }

  std::istream& in_;
  std::string line_;
  std::size_t lineno_ = 0;
  FrdResult result_;
};

std::string e12(double v) {
  if (std::abs(v) < 1e-99) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%12.5E", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  s.resize(std::max(s.size(), width), ' ');
  return s;
}

void write_field(std::ostream& out, const NodalFieldSet& f) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "  100CL  101%s%12zu%20s%2d%5d%10s%2d\n", e12(f.time).c_str(), f.values.size(), "", 1,
                f.step, "", 1);
  out << buf;
  const std::string prefix = f.name == "DISP" ? "D" : f.name == "FORC" ? "F" : "V";
  std::snprintf(buf, sizeof(buf), " -4  %s%5d%5d\n", pad(f.name, 8).c_str(), 4, 1);
  out << buf;
  for (int c = 1; c <= 3; ++c) {
    std::snprintf(buf, sizeof(buf), " -5  %s%5d%5d%5d%5d\n", pad(prefix + std::to_string(c), 8).c_str(), 1, 2, c, 0);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), " -5  %s%5d%5d%5d%5d%5dALL\n", pad("ALL", 8).c_str(), 1, 2, 0, 0, 1);
  out << buf;
  for (const auto& [id, x] : f.values) {
    std::snprintf(buf, sizeof(buf), " -1%10d%s%s%s\n", id, e12(x.x()).c_str(), e12(x.y()).c_str(), e12(x.z()).c_str());
    out << buf;
  }
  out << " -3\n";
}

}  // namespace

FrdResult parse_frd(std::istream& in) { return FrdReader(in).read(); }

FrdResult parse_frd(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_frd(in);
}

void write_frd(std::ostream& out, const FrdResult& result) {
  char buf[128];
  out << "    1C\n";
  if (!result.nodes.empty()) {
    std::snprintf(buf, sizeof(buf), "    2C%18s%12zu%37s%1d\n", "", result.nodes.size(), "", 1);
    out << buf;
    for (const auto& [id, x] : result.nodes) {
      std::snprintf(buf, sizeof(buf), " -1%10d%s%s%s\n", id, e12(x.x()).c_str(), e12(x.y()).c_str(),
                    e12(x.z()).c_str());
      out << buf;
    }
    out << " -3\n";
  }
  for (const auto& f : result.fields) write_field(out, f);
  out << " 9999\n";
}

std::vector<NodalFieldSet> solution_fields(const Mesh& mesh, const Solution& sol, int step) {
  NodalFieldSet disp{step, "DISP", 1.0, {}};
  NodalFieldSet forc{step, "FORC", 1.0, {}};
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    disp.values[mesh.node_id(n)] = sol.displacement.col(n);
    forc.values[mesh.node_id(n)] = sol.reaction(n);
  }
  return {std::move(disp), std::move(forc)};
}

Solution solution_from_fields(const Mesh& mesh, const BoundaryConditions& bc, const NodalFieldSet& disp,
                              const NodalFieldSet* forc) {
  Solution sol;
  sol.displacement = Eigen::Matrix3Xd::Zero(3, mesh.num_nodes());
  for (const auto& [id, u] : disp.values) sol.displacement.col(mesh.node_index(id)) = u;
  std::set<int> constrained;
  for (int id : bc.fixed_nodes) constrained.insert(mesh.node_index(id));
  for (const auto& [id, u] : bc.prescribed) constrained.insert(mesh.node_index(id));
  for (const auto& c : bc.components) constrained.insert(mesh.node_index(c.node_id));
  for (int n : constrained) {
    sol.constrained.push_back(n);
    Vec3 r = Vec3::Zero();
    if (forc) {
      auto it = forc->values.find(mesh.node_id(n));
      if (it != forc->values.end()) r = it->second;
    }
    sol.reactions.push_back(r);
  }
  return sol;
}

void emit_inp(std::ostream& out, const Mesh& mesh, const Material& mat, const BoundaryConditions& bc,
              const InpDeckOptions& opts) {
  mat.check();
  if (opts.increments < 1) throw ValidationError("at least one load increment is required");
  using text::format_double;
  out << "*HEADING\ngelforce static indentation\n";
  write_inp_mesh(out, mesh);
  if (!has_full_eall(mesh)) {
    out << "*ELSET, ELSET=EALL\n";
    for (int e = 0; e < mesh.num_elements(); ++e) {
      out << mesh.element_id(e) << ((e + 1) % 16 == 0 || e + 1 == mesh.num_elements() ? "\n" : ", ");
    }
  }
  out << "*MATERIAL, NAME=GEL\n"
      << "*HYPERELASTIC, NEO HOOKE\n"
      << format_double(mat.c10) << ", " << format_double(mat.d1) << "\n"
      << "*SOLID SECTION, ELSET=EALL, MATERIAL=GEL\n"
      << "*STEP, NLGEOM, INC=" << opts.max_increments << "\n"
      << "*STATIC\n"
      << format_double(1.0 / opts.increments) << ", 1.0\n"
      << "*BOUNDARY\n";
  for (int id : bc.fixed_nodes) out << id << ", 1, 3\n";
  for (const auto& [id, u] : bc.prescribed) {
    for (int d = 0; d < 3; ++d) out << id << ", " << d + 1 << ", " << d + 1 << ", " << format_double(u(d)) << "\n";
  }
  for (const auto& c : bc.components) {
    out << c.node_id << ", " << c.dof + 1 << ", " << c.dof + 1 << ", " << format_double(c.value) << "\n";
  }
  out << "*NODE FILE\nU, RF\n*END STEP\n";
}

std::string emit_inp(const Mesh& mesh, const Material& mat, const BoundaryConditions& bc, const InpDeckOptions& opts) {
  std::ostringstream out;
  emit_inp(out, mesh, mat, bc, opts);
  return out.str();
}

}  // namespace gelforce
