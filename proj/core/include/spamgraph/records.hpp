#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spamgraph {

enum class Label : std::uint8_t { normal = 0, spam = 1, unknown = 2 };

struct ReviewRecord {
  std::size_t review_id = 0;
  std::string user_id;
  std::string product_id;
  int rating = 0;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::string text;
  Label label = Label::unknown;

  friend bool operator==(const ReviewRecord&, const ReviewRecord&) = default;
};

struct QARecord {
  std::size_t qa_id = 0;
  std::string question_id;
  std::string asker_id;
  std::string answerer_id;
  std::int64_t question_time = 0;
  std::int64_t answer_time = 0;
  std::string text;
  Label label = Label::unknown;

  friend bool operator==(const QARecord&, const QARecord&) = default;
};

enum class InputFormat { jsonl, csv };

InputFormat parse_input_format(const std::string& name);

// Rows come back in file order with review_id = row index. Blank lines are
// skipped without consuming an id. Errors name the 1-based data row.
std::vector<ReviewRecord> ingest_reviews(const std::filesystem::path& path, InputFormat format);
std::vector<ReviewRecord> read_reviews_jsonl(std::istream& in);
std::vector<ReviewRecord> read_reviews_csv(std::istream& in);
void write_reviews_jsonl(std::ostream& out, std::span<const ReviewRecord> records);
void save_reviews_jsonl(const std::filesystem::path& path, std::span<const ReviewRecord> records);

std::vector<QARecord> ingest_qa(const std::filesystem::path& path);
std::vector<QARecord> read_qa_jsonl(std::istream& in);
void write_qa_jsonl(std::ostream& out, std::span<const QARecord> records);

std::vector<Label> labels_of(std::span<const ReviewRecord> records);
std::vector<Label> labels_of(std::span<const QARecord> records);

// Calendar (year, month) of a UTC epoch timestamp.
struct YearMonth {
  int year = 0;
  unsigned month = 0;
  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};
YearMonth utc_year_month(std::int64_t epoch_seconds);

enum class SplitTag : std::uint8_t { train = 0, valid = 1, test = 2 };

struct SplitRatios {
  double train = 0.0;
  double valid = 0.0;
  double test = 0.0;
};

struct SplitAssignment {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::vector<SplitTag> tags;

  std::size_t size() const { return tags.size(); }
  std::size_t count(SplitTag tag) const;
  // Node indices with the given tag, ascending.
  std::vector<std::size_t> nodes(SplitTag tag) const;
};

// Nodes are shuffled by a seeded PRNG; the first floor(train*N) go to train,
// the next floor(valid*N) to valid, the remainder to test.
SplitAssignment make_split(std::size_t n_nodes, SplitRatios ratios, std::uint64_t seed);

// Same floor rule applied within each label class separately.
SplitAssignment make_stratified_split(std::span<const Label> labels, SplitRatios ratios,
                                      std::uint64_t seed);

std::string split_to_json(const SplitAssignment& split);
SplitAssignment split_from_json(const std::string& text);
void save_split(const std::filesystem::path& path, const SplitAssignment& split);
SplitAssignment load_split(const std::filesystem::path& path);

}  // namespace spamgraph
