#include "fedrank/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

#include "fedrank/binary_io.hpp"
#include "fedrank/error.hpp"
#include "fedrank/text_format.hpp"

namespace fedrank::corpus {

std::string DocumentRecord::text() const {
  if (title.empty()) return body;
  if (body.empty()) return title;
  return title + " " + body;
}

// ---- DocMap ---------------------------------------------------------------

void DocMap::add(const std::string& doc_id, const std::string& resource_id) {
  if (doc_id.empty() || resource_id.empty()) {
    throw ValidationError("empty doc or resource id in doc map");
  }
  auto [it, inserted] = doc_to_resource_.emplace(doc_id, resource_id);
  if (!inserted && it->second != resource_id) {
    throw ValidationError("document " + doc_id + " mapped to both " +
                          it->second + " and " + resource_id);
  }
  members_[resource_id].insert(doc_id);
}

const std::string* DocMap::resource_of(const std::string& doc_id) const {
  auto it = doc_to_resource_.find(doc_id);
  return it == doc_to_resource_.end() ? nullptr : &it->second;
}

std::vector<ResourceRecord> DocMap::resources() const {
  std::vector<ResourceRecord> out;
  out.reserve(members_.size());
  for (const auto& [rid, docs] : members_) {
    out.push_back({rid, {docs.begin(), docs.end()}});
  }
  return out;
}

std::vector<std::string> DocMap::resource_ids() const {
  std::vector<std::string> out;
  out.reserve(members_.size());
  for (const auto& [rid, docs] : members_) out.push_back(rid);
  return out;
}

// ---- JudgmentSet ----------------------------------------------------------

JudgmentSet::JudgmentSet(std::vector<Judgment> raw) {
  for (auto& j : raw) j.grade = std::max(j.grade, 0);
  std::sort(raw.begin(), raw.end(), [](const Judgment& a, const Judgment& b) {
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    return a.grade > b.grade;
  });
  // Sorted with the highest grade first inside each pair, so keeping the
  // first record of every run keeps the maximum.
  for (auto& j : raw) {
    if (!judgments_.empty() && judgments_.back().query_id == j.query_id &&
        judgments_.back().doc_id == j.doc_id) {
      continue;
    }
    judgments_.push_back(std::move(j));
  }
  build_index();
}

void JudgmentSet::build_index() {
  query_ids_.clear();
  for (const auto& j : judgments_) {
    if (query_ids_.empty() || query_ids_.back() != j.query_id) {
      query_ids_.push_back(j.query_id);
    }
  }
}

void JudgmentSet::resolve(const DocMap& doc_map) {
  resources_.clear();
  coverage_.clear();
  resources_.reserve(judgments_.size());
  for (std::size_t i = 0; i < judgments_.size(); ++i) {
    const std::string* rid = doc_map.resource_of(judgments_[i].doc_id);
    if (rid == nullptr) {
      resolved_ = false;
      throw ValidationError("judged document " + judgments_[i].doc_id +
                            " (query " + judgments_[i].query_id +
                            ") is not in the doc map");
    }
    resources_.push_back(*rid);
    coverage_[{judgments_[i].query_id, *rid}].push_back(i);
  }
  resolved_ = true;
}

const std::string& JudgmentSet::resource_of(std::size_t judgment_index) const {
  if (!resolved_) throw UsageError("judgment set is not resolved");
  return resources_.at(judgment_index);
}

const std::map<PairKey, std::vector<std::size_t>>& JudgmentSet::coverage()
    const {
  if (!resolved_) throw UsageError("judgment set is not resolved");
  return coverage_;
}

std::optional<int> JudgmentSet::grade(const std::string& query_id,
                                      const std::string& doc_id) const {
  auto it = std::lower_bound(
      judgments_.begin(), judgments_.end(), std::pair(query_id, doc_id),
      [](const Judgment& j, const std::pair<std::string, std::string>& key) {
        return std::tie(j.query_id, j.doc_id) < std::tie(key.first, key.second);
      });
  if (it == judgments_.end() || it->query_id != query_id ||
      it->doc_id != doc_id) {
    return std::nullopt;
  }
  return it->grade;
}

bool JudgmentSet::has_query(const std::string& query_id) const {
  return std::binary_search(query_ids_.begin(), query_ids_.end(), query_id);
}

JudgmentSet JudgmentSet::restrict_to(
    const std::set<std::string>& query_ids) const {
  JudgmentSet out;
  for (std::size_t i = 0; i < judgments_.size(); ++i) {
    if (!query_ids.contains(judgments_[i].query_id)) continue;
    out.judgments_.push_back(judgments_[i]);
    if (resolved_) {
      out.resources_.push_back(resources_[i]);
      out.coverage_[{judgments_[i].query_id, resources_[i]}].push_back(
          out.judgments_.size() - 1);
    }
  }
  out.resolved_ = resolved_;
  out.build_index();
  return out;
}

// ---- parsing --------------------------------------------------------------

namespace {

int parse_int(std::string_view token, std::size_t line) {
  int value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ParseError("grade '" + std::string(token) + "' is not an integer",
                     line);
  }
  return value;
}

}  // namespace

std::vector<QueryRecord> parse_queries(std::istream& in) {
  std::vector<QueryRecord> out;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (text::next_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError("expected query_id<TAB>text", lineno);
    }
    QueryRecord rec{line.substr(0, tab), line.substr(tab + 1)};
    auto [it, inserted] = seen.emplace(rec.query_id, lineno);
    if (!inserted) {
      throw ParseError("duplicate query id " + rec.query_id +
                           " (first seen on line " +
                           std::to_string(it->second) + ")",
                       lineno);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

JudgmentSet parse_qrels(std::istream& in) {
  std::vector<Judgment> raw;
  std::string line;
  std::size_t lineno = 0;
  while (text::next_line(in, line)) {
    ++lineno;
    const auto cols = text::split_whitespace(line);
    if (cols.empty()) continue;
    if (cols.size() != 4) {
      throw ParseError("expected 4 columns 'query_id iteration doc_id grade', got " +
                           std::to_string(cols.size()),
                       lineno);
    }
    raw.push_back({std::string(cols[0]), std::string(cols[2]),
                   parse_int(cols[3], lineno)});
  }
  return JudgmentSet(std::move(raw));
}

DocMap parse_doc_map(std::istream& in) {
  DocMap out;
  std::string line;
  std::size_t lineno = 0;
  while (text::next_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw ParseError("expected doc_id<TAB>resource_id", lineno);
    }
    try {
      out.add(std::string(cols[0]), std::string(cols[1]));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

std::vector<DocumentRecord> parse_documents(std::istream& in) {
  std::vector<DocumentRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (text::next_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() < 2 || cols.size() > 3 || cols[0].empty()) {
      throw ParseError("expected doc_id<TAB>title[<TAB>body]", lineno);
    }
    DocumentRecord rec;
    rec.doc_id = std::string(cols[0]);
    rec.title = std::string(cols[1]);
    if (cols.size() == 3) rec.body = std::string(cols[2]);
    if (!seen.insert(rec.doc_id).second) {
      throw ParseError("duplicate document id " + rec.doc_id, lineno);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string serialize_queries(const std::vector<QueryRecord>& queries) {
  std::string out;
  for (const auto& q : queries) out += q.query_id + "\t" + q.text + "\n";
  return out;
}

std::string serialize_qrels(const JudgmentSet& judgments) {
  std::string out;
  for (const auto& j : judgments.judgments()) {
    out += j.query_id + " 0 " + j.doc_id + " " + std::to_string(j.grade) + "\n";
  }
  return out;
}

std::string serialize_doc_map(const DocMap& doc_map) {
  std::string out;
  for (const auto& [doc, rid] : doc_map.entries()) {
    out += doc + "\t" + rid + "\n";
  }
  return out;
}

std::string serialize_documents(const std::vector<DocumentRecord>& docs) {
  std::string out;
  for (const auto& d : docs) {
    out += d.doc_id + "\t" + d.title + "\t" + d.body + "\n";
  }
  return out;
}

// ---- top-N selection ------------------------------------------------------

TopDocuments select_top_documents(const JudgmentSet& judgments,
                                  const DocMap& doc_map, std::size_t top_n,
                                  const std::set<std::string>* queries) {
  if (top_n == 0) throw UsageError("top_n must be at least 1");
  if (!judgments.resolved()) throw UsageError("judgment set is not resolved");

  // resource -> doc -> aggregate grade
  std::map<std::string, std::map<std::string, long long>> scores;
  const auto& all = judgments.judgments();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (queries != nullptr && !queries->contains(all[i].query_id)) continue;
    scores[judgments.resource_of(i)][all[i].doc_id] += all[i].grade;
  }

  TopDocuments out;
  for (const auto& rid : doc_map.resource_ids()) {
    auto& selected = out.per_resource[rid];
    auto it = scores.find(rid);
    if (it == scores.end()) {
      out.unjudged_resources.push_back(rid);
      continue;
    }
    std::vector<std::pair<std::string, long long>> ranked(it->second.begin(),
                                                          it->second.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) {
                       if (a.second != b.second) return a.second > b.second;
                       return a.first < b.first;
                     });
    for (std::size_t i = 0; i < ranked.size() && i < top_n; ++i) {
      selected.push_back(ranked[i].first);
    }
  }
  return out;
}

// ---- dataset --------------------------------------------------------------

const QueryRecord* Dataset::find_query(const std::string& query_id) const {
  for (const auto& q : queries) {
    if (q.query_id == query_id) return &q;
  }
  return nullptr;
}

const DocumentRecord* Dataset::find_document(const std::string& doc_id) const {
  auto it = std::lower_bound(
      documents.begin(), documents.end(), doc_id,
      [](const DocumentRecord& d, const std::string& id) { return d.doc_id < id; });
  return it != documents.end() && it->doc_id == doc_id ? &*it : nullptr;
}

void Dataset::validate() {
  std::set<std::string> qids;
  for (const auto& q : queries) {
    if (q.query_id.empty()) throw ValidationError("empty query id");
    if (!qids.insert(q.query_id).second) {
      throw ValidationError("duplicate query id " + q.query_id);
    }
  }
  for (const auto& qid : judgments.query_ids()) {
    if (!qids.contains(qid)) {
      throw ValidationError("judged query " + qid + " missing from queries");
    }
  }
  std::sort(documents.begin(), documents.end(),
            [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
  for (std::size_t i = 0; i < documents.size(); ++i) {
    auto& d = documents[i];
    if (i > 0 && documents[i - 1].doc_id == d.doc_id) {
      throw ValidationError("duplicate document id " + d.doc_id);
    }
    const std::string* rid = doc_map.resource_of(d.doc_id);
    if (rid == nullptr) {
      throw ValidationError("document " + d.doc_id + " is not in the doc map");
    }
    d.resource_id = *rid;
  }
  judgments.resolve(doc_map);
}

std::string DatasetManifest::to_text() const {
  std::ostringstream out;
  out << "queries = " << queries << "\n"
      << "documents = " << documents << "\n"
      << "resources = " << resources << "\n"
      << "judgments = " << judgments << "\n"
      << "digest = " << digest << "\n";
  for (const auto& [k, v] : provenance) out << "source." << k << " = " << v << "\n";
  return out.str();
}

DatasetManifest DatasetManifest::from_text(std::istream& in) {
  DatasetManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (text::next_line(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    const std::string key(text::trim(std::string_view(line).substr(0, eq)));
    const std::string value(text::trim(std::string_view(line).substr(eq + 1)));
    auto count = [&]() -> std::size_t {
      try {
        return std::stoull(value);
      } catch (const std::exception&) {
        throw ParseError("bad count for " + key, lineno);
      }
    };
    if (key == "queries") m.queries = count();
    else if (key == "documents") m.documents = count();
    else if (key == "resources") m.resources = count();
    else if (key == "judgments") m.judgments = count();
    else if (key == "digest") m.digest = value;
    else if (key.starts_with("source.")) m.provenance[key.substr(7)] = value;
    else throw ParseError("unknown manifest key " + key, lineno);
  }
  return m;
}

DatasetManifest dataset_stats(const Dataset& dataset) {
  DatasetManifest m;
  m.queries = dataset.queries.size();
  m.documents = dataset.doc_map.document_count();
  m.resources = dataset.doc_map.resource_count();
  m.judgments = dataset.judgments.size();

  auto sorted_queries = dataset.queries;
  std::sort(sorted_queries.begin(), sorted_queries.end(),
            [](const auto& a, const auto& b) { return a.query_id < b.query_id; });
  std::uint64_t h = binio::fnv1a64(serialize_queries(sorted_queries));
  h = binio::fnv1a64(serialize_qrels(dataset.judgments), h);
  h = binio::fnv1a64(serialize_doc_map(dataset.doc_map), h);
  h = binio::fnv1a64(serialize_documents(dataset.documents), h);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  m.digest = buf;
  return m;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

template <typename Fn>
auto parse_file(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_text(path);
  try {
    return fn(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ":" + std::to_string(e.line()) + ": " + e.detail(),
                     0);
  }
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  const DatasetManifest& manifest) {
  std::filesystem::create_directories(dir);
  write_text(dir / kQueriesFile, serialize_queries(dataset.queries));
  write_text(dir / kQrelsFile, serialize_qrels(dataset.judgments));
  write_text(dir / kDocMapFile, serialize_doc_map(dataset.doc_map));
  if (!dataset.documents.empty()) {
    write_text(dir / kDocumentsFile, serialize_documents(dataset.documents));
  }
  write_text(dir / kManifestFile, manifest.to_text());
}

Dataset load_sources(const std::filesystem::path& queries,
                     const std::filesystem::path& qrels,
                     const std::filesystem::path& doc_map,
                     const std::filesystem::path& documents) {
  Dataset d;
  d.queries = parse_file(queries, [](auto& in) { return parse_queries(in); });
  d.judgments = parse_file(qrels, [](auto& in) { return parse_qrels(in); });
  d.doc_map = parse_file(doc_map, [](auto& in) { return parse_doc_map(in); });
  if (!documents.empty()) {
    d.documents = parse_file(documents, [](auto& in) { return parse_documents(in); });
  }
  d.validate();
  return d;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const bool has_docs = std::filesystem::exists(dir / kDocumentsFile);
  return load_sources(dir / kQueriesFile, dir / kQrelsFile, dir / kDocMapFile,
                      has_docs ? dir / kDocumentsFile : std::filesystem::path());
}

}  // namespace fedrank::corpus
