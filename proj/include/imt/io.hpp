#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "imt/error.hpp"
#include "imt/simulator.hpp"

namespace imt::io {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCode::ParseError, where + ": not a number: '" + std::string(text) + "'");
  }
  return v;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, ErrorCode::IoError, "cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  require(ok, ErrorCode::IoError, "SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed for " + path.string());
}

inline std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

/// Comma-delimited table. Lines starting with '#' carry "key: value"
/// metadata; the first other line names the columns.
struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells) {
    require(cells.size() == columns.size(), ErrorCode::DomainError,
            "row width does not match the header");
    rows.push_back(std::move(cells));
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw Error(ErrorCode::ParseError, "missing column '" + name + "'");
  }

  std::vector<double> numeric_column(const std::string& name) const {
    const auto c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(parse_double(r[c], "column " + name));
    return out;
  }

  std::string meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta) {
      if (k == key) return v;
    }
    return {};
  }

  std::string render() const {
    std::string out;
    for (const auto& [k, v] : meta) out += "# " + k + ": " + v + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out += (i ? "," : "") + columns[i];
    }
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += "\n";
    }
    return out;
  }

  static Table parse(const std::string& text, const std::string& source = "table") {
    Table t;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        const auto colon = line.find(':');
        if (colon != std::string::npos) {
          auto key = line.substr(1, colon - 1);
          auto value = line.substr(colon + 1);
          auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
          };
          trim(key);
          trim(value);
          t.meta.emplace_back(key, value);
        }
        continue;
      }
      std::vector<std::string> cells;
      std::string cell;
      std::istringstream ls(line);
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (!line.empty() && line.back() == ',') cells.emplace_back();
      if (!have_header) {
        t.columns = std::move(cells);
        have_header = true;
      } else {
        require(cells.size() == t.columns.size(), ErrorCode::ParseError,
                source + ": row width " + std::to_string(cells.size()) +
                    " does not match header width " + std::to_string(t.columns.size()));
        t.rows.push_back(std::move(cells));
      }
    }
    require(have_header, ErrorCode::ParseError, source + ": no column header");
    return t;
  }

  static Table load(const std::filesystem::path& path) {
    return parse(read_file(path), path.string());
  }
};

/// One number per line; '#' lines and blank lines are skipped.
inline std::vector<double> parse_values(const std::string& text, const std::string& source) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    out.push_back(parse_double(line, source + ":" + std::to_string(lineno)));
  }
  return out;
}

inline std::vector<double> load_values(const std::filesystem::path& path) {
  return parse_values(read_file(path), path.string());
}

inline std::string render_values(const std::vector<double>& values,
                                 const std::vector<std::pair<std::string, std::string>>& meta) {
  std::string out;
  for (const auto& [k, v] : meta) out += "# " + k + ": " + v + "\n";
  for (double v : values) out += format_double(v) + "\n";
  return out;
}

inline Table trace_table(const std::vector<TraceRow>& trace) {
  Table t;
  t.columns = {"t", "i_i", "v_o", "s"};
  for (const auto& r : trace) {
    t.rows.push_back({format_double(r.t), format_double(r.i_i), format_double(r.v_o),
                      r.s == PhaseState::Metallic ? "1" : "0"});
  }
  return t;
}

inline Table trace_table(const std::vector<ReducedTraceRow>& trace) {
  Table t;
  t.columns = {"t", "v_i"};
  for (const auto& r : trace) t.rows.push_back({format_double(r.t), format_double(r.v_i)});
  return t;
}

inline Table trace_table(const std::vector<FhnRow>& trace) {
  Table t;
  t.columns = {"t", "u", "w"};
  for (const auto& r : trace) {
    t.rows.push_back({format_double(r.t), format_double(r.u), format_double(r.w)});
  }
  return t;
}

inline std::vector<TraceRow> full_trace_from(const Table& t) {
  const auto ts = t.numeric_column("t");
  const auto is = t.numeric_column("i_i");
  const auto vs = t.numeric_column("v_o");
  const auto ss = t.numeric_column("s");
  std::vector<TraceRow> out;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    out.push_back({ts[k], is[k], vs[k], ss[k] != 0.0 ? PhaseState::Metallic : PhaseState::Insulating});
  }
  return out;
}

inline SpikeTrain spike_train_from_values(std::vector<double> times) {
  SpikeTrain tr;
  tr.spike_times = std::move(times);
  for (std::size_t k = 1; k < tr.spike_times.size(); ++k) {
    require(tr.spike_times[k] > tr.spike_times[k - 1], ErrorCode::ParseError,
            "spike times must be strictly increasing");
  }
  tr.derive_isis();
  return tr;
}

}  // namespace imt::io
