#include "pcf/score_table.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pcf/error.hpp"

namespace pcf {
namespace {

template <typename T>
T parse_number(std::string_view field, const std::filesystem::path& path,
               std::size_t line) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(Errc::MalformedFile, path.string() + ":" +
                                         std::to_string(line + 1) +
                                         ": bad number '" +
                                         std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", score);
  return buf;
}

void write_score_table(const ScoreTable& table,
                       const std::filesystem::path& path) {
  std::string out;
  out.reserve(table.size() * 20);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    out += format_score(table[i].score);
    if (table[i].rejected) out += "\trejected";
    out += '\n';
  }
  write_text(path, out);
}

ScoreTable read_score_table(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  ScoreTable table;
  table.reserve(lines.size());
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto fields = split(lines[n], '\t');
    if (fields.size() < 2 || fields.size() > 3 ||
        (fields.size() == 3 && fields[2] != "rejected")) {
      throw Error(Errc::MalformedFile,
                  path.string() + ":" + std::to_string(n + 1) +
                      ": expected pair_index<TAB>score");
    }
    const auto index = parse_number<std::size_t>(fields[0], path, n);
    if (index != table.size()) {
      throw Error(Errc::MalformedFile,
                  path.string() + ":" + std::to_string(n + 1) +
                      ": pair indices must be consecutive from 0");
    }
    table.push_back({parse_number<double>(fields[1], path, n),
                     fields.size() == 3});
  }
  return table;
}

std::vector<IndexPair> read_index_pairs(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<IndexPair> pairs;
  pairs.reserve(lines.size());
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto fields = split(lines[n], '\t');
    if (fields.size() != 2) {
      throw Error(Errc::MalformedFile,
                  path.string() + ":" + std::to_string(n + 1) +
                      ": expected src_index<TAB>tgt_index");
    }
    pairs.emplace_back(parse_number<std::size_t>(fields[0], path, n),
                       parse_number<std::size_t>(fields[1], path, n));
  }
  return pairs;
}

void write_index_pairs(const std::vector<IndexPair>& pairs,
                       const std::filesystem::path& path) {
  std::string out;
  for (const auto& [s, t] : pairs) {
    out += std::to_string(s) + '\t' + std::to_string(t) + '\n';
  }
  write_text(path, out);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw Error(Errc::IoError, "read failed: " + path.string());
  return lines;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace pcf
