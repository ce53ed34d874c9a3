#include "bayesbreak/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bayesbreak/numeric.hpp"
#include "json.hpp"

namespace bayesbreak {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Poisson: return "poisson";
    case Family::Binomial: return "binomial";
    case Family::BetaObs: return "betaobs";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "poisson") return Family::Poisson;
  if (name == "binomial") return Family::Binomial;
  if (name == "betaobs" || name == "beta") return Family::BetaObs;
  throw InputError("unknown family '" + std::string(name) + "'");
}

namespace {

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace

void validate(const Sequence& s) {
  const std::size_t n = s.x.size();
  if (n == 0) throw InputError("sequence is empty");
  if (s.y.size() != n || s.w.size() != n) {
    throw InputError("sequence columns have different lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(s.x[i])) throw InputError("non-finite x value");
    if (i > 0 && !(s.x[i] > s.x[i - 1])) {
      throw InputError("x not strictly increasing at x=" + fmt_num(s.x[i]));
    }
    const double y = s.y[i];
    const double w = s.w[i];
    if (!std::isfinite(w) || w < 0.0) {
      throw InputError("weight must be finite and nonnegative at x=" + fmt_num(s.x[i]));
    }
    if (!std::isfinite(y)) throw InputError("non-finite y value at x=" + fmt_num(s.x[i]));
    switch (s.family) {
      case Family::Gaussian: break;
      case Family::Poisson:
        if (!is_integer(y) || y < 0.0) {
          throw InputError("Poisson count must be a nonnegative integer at x=" + fmt_num(s.x[i]));
        }
        if (y > 0.0 && w <= 0.0) {
          throw InputError("Poisson exposure must be positive for a nonzero count at x=" +
                           fmt_num(s.x[i]));
        }
        break;
      case Family::Binomial:
        if (!is_integer(w)) {
          throw InputError("Binomial trial count must be an integer at x=" + fmt_num(s.x[i]));
        }
        if (!is_integer(y) || y < 0.0 || y > w) {
          throw InputError("Binomial successes must be an integer in [0, trials] at x=" +
                           fmt_num(s.x[i]));
        }
        break;
      case Family::BetaObs:
        if (w > 0.0 && !(y > 0.0 && y < 1.0)) {
          throw InputError("Beta observation must lie in (0,1) at x=" + fmt_num(s.x[i]));
        }
        break;
    }
  }
}

Sequence make_sequence(std::vector<double> x, std::vector<double> y, Family family,
                       std::vector<double> w) {
  Sequence s;
  if (w.empty()) w.assign(x.size(), 1.0);
  s.x = std::move(x);
  s.y = std::move(y);
  s.w = std::move(w);
  s.family = family;
  validate(s);
  return s;
}

int Dataset::num_groups() const {
  if (!group_labels) return 1;
  int g = 0;
  for (int v : *group_labels) g = std::max(g, v);
  return g;
}

void validate(const Dataset& d) {
  if (d.subjects.empty()) throw InputError("dataset has no subjects");
  for (const auto& s : d.subjects) {
    validate(s);
    if (s.x != d.grid) throw InputError("subject is not on the shared grid");
  }
  if (d.subject_ids.size() != d.subjects.size()) {
    throw InputError("subject id list does not match subjects");
  }
  if (d.group_labels) {
    if (d.group_labels->size() != d.subjects.size()) {
      throw InputError("group labels do not cover all subjects");
    }
    for (int g : *d.group_labels) {
      if (g < 1) throw InputError("group labels must be in 1..G");
    }
  }
}

Dataset align_grids(const std::vector<Sequence>& sequences) {
  if (sequences.empty()) throw InputError("no sequences to align");
  std::set<double> all;
  for (const auto& s : sequences) {
    validate(s);
    all.insert(s.x.begin(), s.x.end());
  }
  Dataset d;
  d.grid.assign(all.begin(), all.end());
  const std::size_t n = d.grid.size();
  for (std::size_t k = 0; k < sequences.size(); ++k) {
    const auto& s = sequences[k];
    Sequence out;
    out.family = s.family;
    out.x = d.grid;
    out.y.assign(n, 0.0);
    out.w.assign(n, 0.0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      while (d.grid[pos] < s.x[i]) ++pos;
      out.y[pos] = s.y[i];
      out.w[pos] = s.w[i];
    }
    d.subjects.push_back(std::move(out));
    d.subject_ids.push_back(std::to_string(k));
  }
  return d;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view tok, std::string_view col, std::size_t line,
                    std::string_view source) {
  // strtod accepts the same decimal forms people write in CSVs
  std::string s(tok);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw InputError(std::string(source) + ": line " + std::to_string(line) +
                     ": malformed value '" + s + "' in column " + std::string(col));
  }
  return v;
}

struct Row {
  std::string subject;
  double x, y, w;
  std::size_t line;
};

Dataset assemble(const std::vector<Row>& rows, Family family, std::string_view source) {
  if (rows.empty()) throw InputError(std::string(source) + ": no data rows");
  std::vector<std::string> order;
  std::map<std::string, Sequence> by_subject;
  std::map<std::string, std::size_t> last_line;
  for (const auto& r : rows) {
    auto [it, inserted] = by_subject.try_emplace(r.subject);
    if (inserted) {
      order.push_back(r.subject);
      it->second.family = family;
    }
    auto& s = it->second;
    if (!s.x.empty() && !(r.x > s.x.back())) {
      const std::string what = r.x == s.x.back() ? "duplicate x value " : "x not strictly increasing at x=";
      throw InputError(std::string(source) + ": line " + std::to_string(r.line) + ": " + what +
                       fmt_num(r.x) + " in subject '" + r.subject + "'");
    }
    s.x.push_back(r.x);
    s.y.push_back(r.y);
    s.w.push_back(r.w);
    last_line[r.subject] = r.line;
  }
  std::vector<Sequence> seqs;
  for (const auto& id : order) {
    try {
      validate(by_subject[id]);
    } catch (const InputError& e) {
      throw InputError(std::string(source) + ": subject '" + id + "': " + e.what());
    }
    seqs.push_back(by_subject[id]);
  }
  Dataset d = align_grids(seqs);
  d.subject_ids = order;
  return d;
}

}  // namespace

Dataset parse_csv(std::string_view text, Family family, std::string_view source) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  int col_subject = -1, col_x = -1, col_y = -1, col_w = -1;
  std::size_t ncols = 0;
  bool have_header = false;
  std::vector<Row> rows;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line, ',');
    if (!have_header) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto name = cells[c];
        if (name == "subject") col_subject = static_cast<int>(c);
        else if (name == "x") col_x = static_cast<int>(c);
        else if (name == "y") col_y = static_cast<int>(c);
        else if (name == "w") col_w = static_cast<int>(c);
        else {
          throw InputError(std::string(source) + ": line " + std::to_string(line_no) +
                           ": unknown column '" + std::string(name) + "'");
        }
      }
      if (col_x < 0 || col_y < 0) {
        throw InputError(std::string(source) + ": line " + std::to_string(line_no) +
                         ": header must contain columns x and y");
      }
      ncols = cells.size();
      have_header = true;
      continue;
    }
    if (cells.size() != ncols) {
      throw InputError(std::string(source) + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(ncols) + " fields, got " + std::to_string(cells.size()));
    }
    Row r;
    r.line = line_no;
    r.subject = col_subject >= 0 ? std::string(cells[col_subject]) : std::string("0");
    r.x = parse_number(cells[col_x], "x", line_no, source);
    r.y = parse_number(cells[col_y], "y", line_no, source);
    r.w = col_w >= 0 ? parse_number(cells[col_w], "w", line_no, source) : 1.0;
    rows.push_back(std::move(r));
  }
  if (!have_header) throw InputError(std::string(source) + ": missing header row");
  return assemble(rows, family, source);
}

Dataset parse_json(std::string_view text, Family family, std::string_view source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string(source) + ": " + e.what());
  }
  if (!j.is_array()) throw InputError(std::string(source) + ": expected an array of rows");
  std::vector<Row> rows;
  std::size_t idx = 0;
  for (const auto& item : j) {
    ++idx;
    if (!item.is_object() || !item.contains("x") || !item.contains("y")) {
      throw InputError(std::string(source) + ": row " + std::to_string(idx) +
                       ": expected object with x and y");
    }
    for (const auto& [key, _] : item.items()) {
      if (key != "subject" && key != "x" && key != "y" && key != "w") {
        throw InputError(std::string(source) + ": row " + std::to_string(idx) + ": unknown key '" +
                         key + "'");
      }
    }
    Row r;
    r.line = idx;
    try {
      if (item.contains("subject")) {
        const auto& s = item["subject"];
        r.subject = s.is_string() ? s.get<std::string>() : s.dump();
      } else {
        r.subject = "0";
      }
      r.x = item["x"].get<double>();
      r.y = item["y"].get<double>();
      r.w = item.contains("w") ? item["w"].get<double>() : 1.0;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string(source) + ": row " + std::to_string(idx) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  return assemble(rows, family, source);
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Dataset load_sequences(const std::filesystem::path& path, DataFormat format, Family family) {
  const auto text = read_file(path);
  return format == DataFormat::Csv ? parse_csv(text, family, path.string())
                                   : parse_json(text, family, path.string());
}

std::string to_csv(const Dataset& d) {
  std::string out = "subject,x,y,w\n";
  for (std::size_t s = 0; s < d.subjects.size(); ++s) {
    const auto& seq = d.subjects[s];
    for (std::size_t i = 0; i < seq.size(); ++i) {
      out += d.subject_ids[s] + "," + fmt_num(seq.x[i]) + "," + fmt_num(seq.y[i]) + "," +
             fmt_num(seq.w[i]) + "\n";
    }
  }
  return out;
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_csv(d);
}

void parse_group_labels(Dataset& d, std::string_view text, std::string_view source) {
  std::map<std::string, int> labels;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header = false;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (!header) {
      if (cells.size() != 2 || cells[0] != "subject" || cells[1] != "group") {
        throw InputError(std::string(source) + ": header must be 'subject,group'");
      }
      header = true;
      continue;
    }
    if (cells.size() != 2) {
      throw InputError(std::string(source) + ": line " + std::to_string(line_no) +
                       ": expected 2 fields");
    }
    const double g = parse_number(cells[1], "group", line_no, source);
    if (!is_integer(g) || g < 1) {
      throw InputError(std::string(source) + ": line " + std::to_string(line_no) +
                       ": group must be a positive integer");
    }
    labels[std::string(cells[0])] = static_cast<int>(g);
  }
  std::vector<int> out;
  for (const auto& id : d.subject_ids) {
    const auto it = labels.find(id);
    if (it == labels.end()) {
      throw InputError(std::string(source) + ": no group label for subject '" + id + "'");
    }
    out.push_back(it->second);
  }
  d.group_labels = std::move(out);
}

void load_group_labels(Dataset& d, const std::filesystem::path& path) {
  parse_group_labels(d, read_file(path), path.string());
}

}  // namespace bayesbreak
