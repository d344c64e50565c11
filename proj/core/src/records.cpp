#include "spamgraph/records.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "spamgraph/error.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {

using nlohmann::json;
using nlohmann::ordered_json;

InputFormat parse_input_format(const std::string& name) {
  if (name == "jsonl") return InputFormat::jsonl;
  if (name == "csv") return InputFormat::csv;
  throw InvalidArgument("unknown input format '" + name + "' (expected jsonl or csv)");
}

namespace {

[[noreturn]] void row_error(std::size_t row, const std::string& field, const std::string& what) {
  throw FormatError("row " + std::to_string(row) + ", field '" + field + "': " + what);
}

std::string string_field(const json& obj, const char* key, std::size_t row) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) row_error(row, key, "missing");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  row_error(row, key, "expected a string");
}

std::int64_t int_field(const json& obj, const char* key, std::size_t row) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) row_error(row, key, "missing");
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (std::isfinite(v) && v == std::floor(v)) return static_cast<std::int64_t>(v);
  }
  row_error(row, key, "expected an integer");
}

Label label_from_json(const json& obj, std::size_t row) {
  auto it = obj.find("label");
  if (it == obj.end() || it->is_null()) return Label::unknown;
  if (it->is_number_integer()) {
    const auto v = it->get<std::int64_t>();
    if (v == 0) return Label::normal;
    if (v == 1) return Label::spam;
  }
  row_error(row, "label", "expected 0, 1 or null");
}

void check_rating(std::int64_t rating, std::size_t row) {
  if (rating < 1 || rating > 5) {
    throw FormatError("rating out of range at row " + std::to_string(row) + " (got " +
                      std::to_string(rating) + ")");
  }
}

Label label_from_text(const std::string& s, std::size_t row) {
  if (s.empty() || s == "null" || s == "unknown") return Label::unknown;
  if (s == "0") return Label::normal;
  if (s == "1") return Label::spam;
  row_error(row, "label", "expected 0, 1 or empty");
}

std::int64_t int_from_text(const std::string& s, std::size_t row, const char* field) {
  std::int64_t value = 0;
  std::size_t used = 0;
  try {
    value = std::stoll(s, &used);
  } catch (const std::exception&) {
    row_error(row, field, "expected an integer, got '" + s + "'");
  }
  if (used != s.size()) row_error(row, field, "expected an integer, got '" + s + "'");
  return value;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Splits off the first `count` comma-separated fields (quote-aware). The rest
// of the line, unquoted if it is one quoted field, is returned as the tail.
std::vector<std::string> split_csv_head(const std::string& line, std::size_t count,
                                        std::size_t row) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (fields.size() < count) {
    std::string field;
    if (pos < line.size() && line[pos] == '"') {
      ++pos;
      bool closed = false;
      while (pos < line.size()) {
        if (line[pos] == '"') {
          if (pos + 1 < line.size() && line[pos + 1] == '"') {
            field.push_back('"');
            pos += 2;
            continue;
          }
          ++pos;
          closed = true;
          break;
        }
        field.push_back(line[pos++]);
      }
      if (!closed) row_error(row, "csv", "unterminated quoted field");
      if (pos < line.size() && line[pos] != ',') row_error(row, "csv", "text after closing quote");
    } else {
      const auto comma = line.find(',', pos);
      field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      pos = comma == std::string::npos ? line.size() : comma;
    }
    fields.push_back(std::move(field));
    if (pos >= line.size()) break;
    ++pos;  // comma
  }
  if (fields.size() < count) row_error(row, "csv", "too few columns");

  std::string tail = pos <= line.size() ? line.substr(std::min(pos, line.size())) : std::string{};
  if (tail.size() >= 2 && tail.front() == '"' && tail.back() == '"') {
    std::string unquoted;
    for (std::size_t i = 1; i + 1 < tail.size(); ++i) {
      unquoted.push_back(tail[i]);
      if (tail[i] == '"' && tail[i + 1] == '"') ++i;
    }
    tail = std::move(unquoted);
  }
  fields.push_back(std::move(tail));
  return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::vector<ReviewRecord> read_reviews_jsonl(std::istream& in) {
  std::vector<ReviewRecord> records;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      row_error(row, "json", e.what());
    }
    if (!obj.is_object()) row_error(row, "json", "expected an object");

    ReviewRecord r;
    r.review_id = records.size();
    r.user_id = string_field(obj, "user_id", row);
    r.product_id = string_field(obj, "product_id", row);
    const auto rating = int_field(obj, "rating", row);
    check_rating(rating, row);
    r.rating = static_cast<int>(rating);
    r.timestamp = int_field(obj, "timestamp", row);
    r.text = string_field(obj, "text", row);
    r.label = label_from_json(obj, row);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ReviewRecord> read_reviews_csv(std::istream& in) {
  std::vector<ReviewRecord> records;
  std::string line;
  if (!std::getline(in, line)) return records;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Header: named columns, `text` must be last.
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(trim(col));
  }
  if (header.empty() || header.back() != "text") {
    throw FormatError("csv header must end with the 'text' column");
  }
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  for (const char* required : {"user_id", "product_id", "rating", "timestamp"}) {
    if (!column.contains(required)) {
      throw FormatError(std::string("csv header is missing column '") + required + "'");
    }
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_head(line, header.size() - 1, row);

    ReviewRecord r;
    r.review_id = records.size();
    r.user_id = fields[column["user_id"]];
    r.product_id = fields[column["product_id"]];
    if (r.user_id.empty()) row_error(row, "user_id", "missing");
    if (r.product_id.empty()) row_error(row, "product_id", "missing");
    const auto rating = int_from_text(trim(fields[column["rating"]]), row, "rating");
    check_rating(rating, row);
    r.rating = static_cast<int>(rating);
    r.timestamp = int_from_text(trim(fields[column["timestamp"]]), row, "timestamp");
    if (auto it = column.find("label"); it != column.end()) {
      r.label = label_from_text(trim(fields[it->second]), row);
    }
    r.text = fields.back();
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ReviewRecord> ingest_reviews(const std::filesystem::path& path, InputFormat format) {
  auto in = open_input(path);
  return format == InputFormat::jsonl ? read_reviews_jsonl(in) : read_reviews_csv(in);
}

namespace {

void put_label(ordered_json& obj, Label label) {
  if (label == Label::unknown) return;
  obj["label"] = label == Label::spam ? 1 : 0;
}

}  // namespace

void write_reviews_jsonl(std::ostream& out, std::span<const ReviewRecord> records) {
  for (const auto& r : records) {
    ordered_json obj;
    obj["user_id"] = r.user_id;
    obj["product_id"] = r.product_id;
    obj["rating"] = r.rating;
    obj["timestamp"] = r.timestamp;
    obj["text"] = r.text;
    put_label(obj, r.label);
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

void save_reviews_jsonl(const std::filesystem::path& path, std::span<const ReviewRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_reviews_jsonl(out, records);
}

std::vector<QARecord> read_qa_jsonl(std::istream& in) {
  std::vector<QARecord> records;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      row_error(row, "json", e.what());
    }
    if (!obj.is_object()) row_error(row, "json", "expected an object");
    QARecord r;
    r.qa_id = records.size();
    r.question_id = string_field(obj, "question_id", row);
    r.asker_id = string_field(obj, "asker_id", row);
    r.answerer_id = string_field(obj, "answerer_id", row);
    r.question_time = int_field(obj, "question_time", row);
    r.answer_time = int_field(obj, "answer_time", row);
    if (r.answer_time < r.question_time) {
      row_error(row, "answer_time", "earlier than question_time");
    }
    r.text = string_field(obj, "text", row);
    r.label = label_from_json(obj, row);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<QARecord> ingest_qa(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_qa_jsonl(in);
}

void write_qa_jsonl(std::ostream& out, std::span<const QARecord> records) {
  for (const auto& r : records) {
    ordered_json obj;
    obj["question_id"] = r.question_id;
    obj["asker_id"] = r.asker_id;
    obj["answerer_id"] = r.answerer_id;
    obj["question_time"] = r.question_time;
    obj["answer_time"] = r.answer_time;
    obj["text"] = r.text;
    put_label(obj, r.label);
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

std::vector<Label> labels_of(std::span<const ReviewRecord> records) {
  std::vector<Label> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

std::vector<Label> labels_of(std::span<const QARecord> records) {
  std::vector<Label> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

YearMonth utc_year_month(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{epoch_seconds}};
  const year_month_day ymd{floor<days>(tp)};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
}

// ---------------------------------------------------------------------------
// Splits

std::size_t SplitAssignment::count(SplitTag tag) const {
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), tag));
}

std::vector<std::size_t> SplitAssignment::nodes(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == tag) out.push_back(i);
  }
  return out;
}

namespace {

void check_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.valid < 0 || r.test < 0) {
    throw InvalidArgument("split ratios must be nonnegative");
  }
  if (std::abs(r.train + r.valid + r.test - 1.0) > 1e-9) {
    throw InvalidArgument("split ratios must sum to 1");
  }
}

// floor(r * n), tolerant of representation error in decimal ratios such as
// 0.09 * 100 = 8.999...
std::size_t floor_share(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

void assign_shuffled(std::vector<std::size_t>& order, const SplitRatios& ratios, Rng& rng,
                     std::vector<SplitTag>& tags) {
  rng.shuffle(order.begin(), order.end());
  const std::size_t n = order.size();
  const std::size_t n_train = std::min(n, floor_share(ratios.train, n));
  const std::size_t n_valid = std::min(n - n_train, floor_share(ratios.valid, n));
  for (std::size_t k = 0; k < n; ++k) {
    tags[order[k]] = k < n_train             ? SplitTag::train
                     : k < n_train + n_valid ? SplitTag::valid
                                             : SplitTag::test;
  }
}

}  // namespace

SplitAssignment make_split(std::size_t n_nodes, SplitRatios ratios, std::uint64_t seed) {
  check_ratios(ratios);
  if (n_nodes == 0) throw InvalidArgument("split needs at least one node");
  SplitAssignment split{seed, ratios, std::vector<SplitTag>(n_nodes, SplitTag::test)};
  std::vector<std::size_t> order(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) order[i] = i;
  Rng rng(seed);
  assign_shuffled(order, ratios, rng, split.tags);
  return split;
}

SplitAssignment make_stratified_split(std::span<const Label> labels, SplitRatios ratios,
                                      std::uint64_t seed) {
  check_ratios(ratios);
  if (labels.empty()) throw InvalidArgument("split needs at least one node");
  SplitAssignment split{seed, ratios, std::vector<SplitTag>(labels.size(), SplitTag::test)};
  Rng rng(seed);
  for (Label cls : {Label::normal, Label::spam, Label::unknown}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    assign_shuffled(members, ratios, rng, split.tags);
  }
  return split;
}

std::string split_to_json(const SplitAssignment& split) {
  ordered_json obj;
  obj["seed"] = split.seed;
  obj["ratios"] = {split.ratios.train, split.ratios.valid, split.ratios.test};
  auto tags = json::array();
  for (SplitTag t : split.tags) tags.push_back(static_cast<int>(t));
  obj["tags"] = std::move(tags);
  return obj.dump();
}

SplitAssignment split_from_json(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
    SplitAssignment split;
    split.seed = obj.at("seed").get<std::uint64_t>();
    const auto& r = obj.at("ratios");
    if (!r.is_array() || r.size() != 3) throw FormatError("split ratios must have three entries");
    split.ratios = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>()};
    for (const auto& t : obj.at("tags")) {
      const int v = t.get<int>();
      if (v < 0 || v > 2) throw FormatError("split tag out of range: " + std::to_string(v));
      split.tags.push_back(static_cast<SplitTag>(v));
    }
    return split;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid split file: ") + e.what());
  }
}

void save_split(const std::filesystem::path& path, const SplitAssignment& split) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << split_to_json(split) << '\n';
}

SplitAssignment load_split(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return split_from_json(ss.str());
}

}  // namespace spamgraph
