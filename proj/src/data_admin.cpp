// Copyright 2026 The xmlops Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xmlops/data_admin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "xmlops/kernels.hpp"

namespace xmlops {
namespace {

constexpr std::string_view kSample = "sample";
constexpr std::string_view kDataset = "dataset";
constexpr std::string_view kRecipe = "recipe";
constexpr std::string_view kAnnotation = "annotation";
constexpr std::string_view kExclusion = "exclusion";

double require_param(const RecipeStep& step, const std::string& name) {
  auto it = step.params.find(name);
  if (it == step.params.end()) {
    throw_validation(std::string(enum_name(step.name)) + " step needs parameter '" +
                     name + "'");
  }
  return it->second;
}

std::size_t common_width(const std::vector<RawPayload>& rows, StepKind step) {
  const std::size_t d = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != d) {
      throw_validation(std::string(enum_name(step)) +
                       " needs samples of equal dimension");
    }
  }
  return d;
}

}  // namespace

void validate_recipe_steps(const std::vector<RecipeStep>& steps) {
  for (const auto& step : steps) {
    std::set<std::string> allowed;
    switch (step.name) {
      case StepKind::kStandardize:
      case StepKind::kImputeMean:
        break;
      case StepKind::kClip: {
        allowed = {"lo", "hi"};
        const double lo = require_param(step, "lo");
        const double hi = require_param(step, "hi");
        if (!(lo < hi)) throw_validation("clip requires lo < hi");
        break;
      }
      case StepKind::kWindow: {
        allowed = {"length"};
        const double length = require_param(step, "length");
        if (!(length >= 1) || std::floor(length) != length) {
          throw_validation("window requires an integer length >= 1");
        }
        break;
      }
    }
    for (const auto& [key, value] : step.params) {
      if (!allowed.count(key)) {
        throw_validation("unknown parameter '" + key + "' for " +
                         std::string(enum_name(step.name)) + " step");
      }
      if (!std::isfinite(value)) throw_validation("recipe parameters must be finite");
    }
  }
}

std::vector<RawPayload> transform_payloads(std::vector<RawPayload> rows,
                                           const PreprocessingRecipe& recipe,
                                           std::vector<std::string>* warnings) {
  validate_recipe_steps(recipe.steps);
  if (rows.empty()) throw_validation("cannot preprocess an empty dataset");
  for (const auto& step : recipe.steps) {
    switch (step.name) {
      case StepKind::kStandardize: {
        const std::size_t d = common_width(rows, step.name);
        for (std::size_t j = 0; j < d; ++j) {
          double sum = 0.0;
          std::size_t count = 0;
          for (const auto& r : rows) {
            if (r[j]) {
              sum += *r[j];
              ++count;
            }
          }
          if (count == 0) continue;
          const double mean = sum / static_cast<double>(count);
          double sq = 0.0;
          for (const auto& r : rows) {
            if (r[j]) sq += (*r[j] - mean) * (*r[j] - mean);
          }
          const double sd = std::sqrt(sq / static_cast<double>(count));
          if (sd == 0.0) {
            if (warnings) {
              warnings->push_back("standardize: feature " + std::to_string(j) +
                                  " has zero variance; passed through unchanged");
            }
            continue;
          }
          for (auto& r : rows) {
            if (r[j]) r[j] = (*r[j] - mean) / sd;
          }
        }
        break;
      }
      case StepKind::kClip: {
        const double lo = step.params.at("lo");
        const double hi = step.params.at("hi");
        for (auto& r : rows) {
          for (auto& v : r) {
            if (v) v = std::clamp(*v, lo, hi);
          }
        }
        break;
      }
      case StepKind::kImputeMean: {
        const std::size_t d = common_width(rows, step.name);
        for (std::size_t j = 0; j < d; ++j) {
          double sum = 0.0;
          std::size_t count = 0;
          for (const auto& r : rows) {
            if (r[j]) {
              sum += *r[j];
              ++count;
            }
          }
          if (count == rows.size()) continue;
          if (count == 0) {
            throw_validation("impute_mean: feature " + std::to_string(j) +
                             " has no observed values");
          }
          const double mean = sum / static_cast<double>(count);
          for (auto& r : rows) {
            if (!r[j]) r[j] = mean;
          }
        }
        break;
      }
      case StepKind::kWindow: {
        const auto length = static_cast<std::size_t>(step.params.at("length"));
        for (auto& r : rows) {
          if (r.size() < length) {
            throw_validation("window length " + std::to_string(length) +
                             " exceeds sample length " + std::to_string(r.size()));
          }
          r.erase(r.begin(), r.end() - static_cast<std::ptrdiff_t>(length));
        }
        break;
      }
    }
  }
  return rows;
}

DataAdmin::DataAdmin(Store& store, LineageGraph& lineage, Clock clock)
    : store_(store), lineage_(lineage), clock_(std::move(clock)) {}

SampleRecord DataAdmin::ingest_sample(const IngestRequest& request) {
  if (request.payload.empty()) throw_validation("payload must not be empty");
  for (std::size_t i = 0; i < request.payload.size(); ++i) {
    if (request.payload[i] && !std::isfinite(*request.payload[i])) {
      throw_validation("payload entry " + std::to_string(i) +
                       " is not finite (NaN/Inf rejected; use null for missing)");
    }
  }
  if (request.provenance.equipment_id.empty()) {
    throw_validation("provenance.equipment_id is required");
  }
  if (request.label && !std::isfinite(*request.label)) {
    throw_validation("label must be finite");
  }
  SampleRecord record;
  record.payload = request.payload;
  record.captured_at = Timestamp::parse(request.captured_at);
  record.source = request.provenance;
  record.format_tag = request.format_tag;
  const std::string bytes = canonical(record.content());
  record.sample_id = sha256_hex(bytes);
  if (!store_.has_meta(kSample, record.sample_id)) {
    store_.put_blob(bytes);
    store_.put_meta(kSample, record.sample_id, Json(record));
  }
  if (request.label) {
    const auto existing = latest_label(record.sample_id);
    if (!existing || *existing != *request.label) {
      attach_annotation(record.sample_id, *request.label, "ingest", Origin::kSystem);
    }
  }
  return record;
}

SampleRecord DataAdmin::get_sample(const Id& id) const {
  auto meta = store_.get_meta(kSample, id);
  if (!meta) throw_not_found("sample", id);
  return meta->get<SampleRecord>();
}

bool DataAdmin::has_sample(const Id& id) const { return store_.has_meta(kSample, id); }

std::vector<Id> DataAdmin::list_samples() const { return store_.list_meta(kSample); }

DatasetVersion DataAdmin::store_dataset(DatasetVersion dataset) {
  const std::string bytes = canonical(dataset.content());
  dataset.dataset_id = sha256_hex(bytes);
  if (auto existing = store_.get_meta(kDataset, dataset.dataset_id)) {
    return existing->get<DatasetVersion>();
  }
  store_.put_blob(bytes);
  store_.put_meta(kDataset, dataset.dataset_id, Json(dataset));
  return dataset;
}

DatasetVersion DataAdmin::define_dataset(std::vector<Id> members,
                                         std::optional<Id> recipe) {
  std::set<Id> seen;
  for (const Id& id : members) {
    if (!has_sample(id)) throw_not_found("sample", id);
    if (is_excluded(id)) {
      throw_validation("sample " + id + " is marked bad and cannot join a dataset");
    }
    if (!seen.insert(id).second) throw_validation("duplicate dataset member " + id);
  }
  if (recipe && !store_.has_meta(kRecipe, *recipe)) throw_not_found("recipe", *recipe);
  DatasetVersion dataset;
  dataset.members = std::move(members);
  dataset.recipe = std::move(recipe);
  dataset.created_at = clock_();
  return store_dataset(std::move(dataset));
}

DatasetVersion DataAdmin::get_dataset(const Id& dataset_id) const {
  auto meta = store_.get_meta(kDataset, dataset_id);
  if (!meta) throw_not_found("dataset", dataset_id);
  return meta->get<DatasetVersion>();
}

bool DataAdmin::has_dataset(const Id& dataset_id) const {
  return store_.has_meta(kDataset, dataset_id);
}

std::vector<Id> DataAdmin::list_datasets() const { return store_.list_meta(kDataset); }

DatasetVersion DataAdmin::seal_dataset(const Id& dataset_id) {
  DatasetVersion dataset = get_dataset(dataset_id);
  if (dataset.sealed) return dataset;
  dataset.sealed = true;
  store_.put_meta(kDataset, dataset_id, Json(dataset));
  for (const Id& member : dataset.members) {
    lineage_.add_edge(member, dataset_id, Relation::kDerivedFrom);
  }
  if (dataset.recipe) lineage_.add_edge(*dataset.recipe, dataset_id, Relation::kDerivedFrom);
  if (dataset.parent) lineage_.add_edge(*dataset.parent, dataset_id, Relation::kDerivedFrom);
  return dataset;
}

DatasetVersion DataAdmin::mutable_draft(const Id& dataset_id) const {
  DatasetVersion dataset = get_dataset(dataset_id);
  if (dataset.sealed) throw_immutable("dataset " + dataset_id + " is sealed");
  return dataset;
}

DatasetVersion DataAdmin::rekey_draft(const Id& old_id, DatasetVersion draft) {
  DatasetVersion stored = store_dataset(std::move(draft));
  if (stored.dataset_id != old_id) store_.remove_meta(kDataset, old_id);
  return stored;
}

DatasetVersion DataAdmin::append_samples(const Id& dataset_id,
                                         std::span<const Id> samples) {
  DatasetVersion draft = mutable_draft(dataset_id);
  std::set<Id> seen(draft.members.begin(), draft.members.end());
  for (const Id& id : samples) {
    if (!has_sample(id)) throw_not_found("sample", id);
    if (is_excluded(id)) throw_validation("sample " + id + " is marked bad");
    if (!seen.insert(id).second) throw_validation("duplicate dataset member " + id);
    draft.members.push_back(id);
  }
  return rekey_draft(dataset_id, std::move(draft));
}

DatasetVersion DataAdmin::remove_samples(const Id& dataset_id,
                                         std::span<const Id> samples) {
  DatasetVersion draft = mutable_draft(dataset_id);
  const std::set<Id> drop(samples.begin(), samples.end());
  std::erase_if(draft.members, [&](const Id& id) { return drop.count(id) > 0; });
  return rekey_draft(dataset_id, std::move(draft));
}

DatasetVersion DataAdmin::set_recipe(const Id& dataset_id, std::optional<Id> recipe) {
  DatasetVersion draft = mutable_draft(dataset_id);
  if (recipe && !store_.has_meta(kRecipe, *recipe)) throw_not_found("recipe", *recipe);
  draft.recipe = std::move(recipe);
  return rekey_draft(dataset_id, std::move(draft));
}

PreprocessingRecipe DataAdmin::register_recipe(std::vector<RecipeStep> steps) {
  validate_recipe_steps(steps);
  PreprocessingRecipe recipe;
  recipe.steps = std::move(steps);
  const std::string bytes = canonical(recipe.content());
  recipe.recipe_id = sha256_hex(bytes);
  if (!store_.has_meta(kRecipe, recipe.recipe_id)) {
    store_.put_blob(bytes);
    store_.put_meta(kRecipe, recipe.recipe_id, Json(recipe));
  }
  return recipe;
}

PreprocessingRecipe DataAdmin::get_recipe(const Id& recipe_id) const {
  auto meta = store_.get_meta(kRecipe, recipe_id);
  if (!meta) throw_not_found("recipe", recipe_id);
  return meta->get<PreprocessingRecipe>();
}

RecipeOutcome DataAdmin::apply_recipe(const Id& dataset_id,
                                      const PreprocessingRecipe& recipe_in) {
  const DatasetVersion source = get_dataset(dataset_id);
  if (!source.sealed) {
    throw_precondition("dataset " + dataset_id + " must be sealed before preprocessing");
  }
  if (source.members.empty()) throw_validation("cannot preprocess an empty dataset");
  const PreprocessingRecipe recipe = register_recipe(recipe_in.steps);

  std::vector<SampleRecord> originals;
  std::vector<RawPayload> rows;
  for (const Id& id : source.members) {
    originals.push_back(get_sample(id));
    rows.push_back(originals.back().payload);
  }
  RecipeOutcome outcome;
  const auto transformed = transform_payloads(std::move(rows), recipe, &outcome.warnings);

  std::vector<Id> derived_ids;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    const SampleRecord& original = originals[i];
    IngestRequest request;
    request.payload = transformed[i];
    request.provenance = original.source;
    request.provenance.sensor_config["derived_from"] = original.sample_id;
    request.provenance.sensor_config["recipe"] = recipe.recipe_id;
    request.captured_at = original.captured_at.to_string();
    request.format_tag = original.format_tag;
    SampleRecord derived = ingest_sample(request);
    lineage_.add_edge(original.sample_id, derived.sample_id, Relation::kDerivedFrom);
    if (auto label = latest_label(original.sample_id)) {
      const auto current = latest_label(derived.sample_id);
      if (!current || *current != *label) {
        attach_annotation(derived.sample_id, *label, "recipe:" + recipe.recipe_id,
                          Origin::kSystem);
      }
    }
    derived_ids.push_back(derived.sample_id);
  }
  DatasetVersion derived;
  derived.members = std::move(derived_ids);
  derived.recipe = recipe.recipe_id;
  derived.parent = source.dataset_id;
  derived.created_at = clock_();
  derived = store_dataset(std::move(derived));
  outcome.dataset = seal_dataset(derived.dataset_id);
  return outcome;
}

void DataAdmin::index_annotations() const {
  if (annotations_indexed_) return;
  for (const Id& id : store_.list_meta(kAnnotation)) {
    Annotation a = store_.get_meta(kAnnotation, id)->get<Annotation>();
    annotations_[a.sample_id].push_back(std::move(a));
  }
  for (auto& [_, list] : annotations_) {
    std::stable_sort(list.begin(), list.end(), [](const Annotation& a, const Annotation& b) {
      return a.created_at.utc_micros() < b.created_at.utc_micros();
    });
  }
  annotations_indexed_ = true;
}

Annotation DataAdmin::attach_annotation(const Id& sample_id, double label,
                                        std::string author, Origin origin) {
  if (!has_sample(sample_id)) throw_not_found("sample", sample_id);
  if (!std::isfinite(label)) throw_validation("label must be finite");
  index_annotations();
  Annotation a;
  a.sample_id = sample_id;
  a.label = label;
  a.author = std::move(author);
  a.origin = origin;
  a.created_at = clock_();
  // Keep strictly increasing timestamps per sample so "latest wins" is total.
  auto& list = annotations_[sample_id];
  if (!list.empty() && a.created_at.utc_micros() <= list.back().created_at.utc_micros()) {
    a.created_at = list.back().created_at.plus_micros(1);
  }
  Json content = a;
  content.erase("annotation_id");
  a.annotation_id = content_id(content);
  store_.put_meta(kAnnotation, a.annotation_id, Json(a));
  lineage_.add_edge(sample_id, a.annotation_id, Relation::kFeedbackOn);
  list.push_back(a);
  return a;
}

std::vector<Annotation> DataAdmin::annotations_for(const Id& sample_id) const {
  index_annotations();
  auto it = annotations_.find(sample_id);
  if (it == annotations_.end()) return {};
  return it->second;
}

std::optional<double> DataAdmin::latest_label(const Id& sample_id) const {
  index_annotations();
  auto it = annotations_.find(sample_id);
  if (it == annotations_.end() || it->second.empty()) return std::nullopt;
  return it->second.back().label;
}

ExclusionMark DataAdmin::mark_bad(const Id& sample_id, std::string reason,
                                  std::string author) {
  if (!has_sample(sample_id)) throw_not_found("sample", sample_id);
  if (auto existing = store_.get_meta(kExclusion, sample_id)) {
    return existing->get<ExclusionMark>();
  }
  ExclusionMark mark{sample_id, std::move(reason), std::move(author), clock_()};
  store_.put_meta(kExclusion, sample_id, Json(mark));
  return mark;
}

bool DataAdmin::is_excluded(const Id& sample_id) const {
  return store_.has_meta(kExclusion, sample_id);
}

std::vector<Id> DataAdmin::excluded_samples() const {
  return store_.list_meta(kExclusion);
}

std::vector<Id> DataAdmin::find_similar(const Id& sample_id, std::size_t k,
                                        std::optional<Id> scope) const {
  const SampleRecord query = get_sample(sample_id);
  const Vector q = query.dense();
  std::vector<Id> candidates =
      scope ? get_dataset(*scope).members : list_samples();
  std::erase(candidates, sample_id);
  FeatureMatrix points;
  for (const Id& id : candidates) {
    const SampleRecord other = get_sample(id);
    if (other.payload.size() != q.size()) {
      throw_validation("dimension mismatch: sample " + id + " has " +
                       std::to_string(other.payload.size()) + " features, query has " +
                       std::to_string(q.size()));
    }
    points.append_row(other.dense());
  }
  if (candidates.empty()) return {};
  const auto dist = kernels::squared_distances(q, points);
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return candidates[a] < candidates[b];
  });
  std::vector<Id> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    out.push_back(candidates[order[i]]);
  }
  return out;
}

FeatureMatrix DataAdmin::materialize(std::span<const Id> sample_ids) const {
  FeatureMatrix rows;
  for (const Id& id : sample_ids) {
    const Vector row = get_sample(id).dense();
    rows.append_row(row);
  }
  return rows;
}

// --- ingress formats ---------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw_validation("CSV row " + std::to_string(row) + ": unterminated quote");
  out.push_back(field);
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw_validation("CSV row " + std::to_string(row) + ": column '" + column +
                     "' is not a number: '" + text + "'");
  }
  if (!std::isfinite(value)) {
    throw_validation("CSV row " + std::to_string(row) + ": column '" + column +
                     "' is not finite");
  }
  return value;
}

}  // namespace

std::vector<IngestRequest> parse_csv_ingest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw_validation("CSV row 1: missing header row");
  std::vector<std::string> header = split_csv_line(line, 1);
  for (auto& h : header) h = trim(h);
  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto ts_col = find_col("ts");
  const auto eq_col = find_col("equipment_id");
  if (!ts_col) throw_validation("CSV row 1: header lacks the required 'ts' column");
  if (!eq_col) throw_validation("CSV row 1: header lacks the required 'equipment_id' column");
  const auto loc_col = find_col("location");
  const auto fmt_col = find_col("format");
  const auto label_col = find_col("label");
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h == "ts" || h == "equipment_id" || h == "location" || h == "format" ||
        h == "label" || h.rfind("cfg.", 0) == 0) {
      continue;
    }
    feature_cols.push_back(i);
  }
  if (feature_cols.empty()) throw_validation("CSV row 1: no payload columns");

  std::vector<IngestRequest> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line, row);
    if (fields.size() != header.size()) {
      throw_validation("CSV row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);
    IngestRequest request;
    request.captured_at = fields[*ts_col];
    try {
      Timestamp::parse(request.captured_at);
    } catch (const Error& e) {
      throw_validation("CSV row " + std::to_string(row) + ": " + e.what());
    }
    request.provenance.equipment_id = fields[*eq_col];
    if (request.provenance.equipment_id.empty()) {
      throw_validation("CSV row " + std::to_string(row) + ": empty equipment_id");
    }
    if (loc_col) request.provenance.location = fields[*loc_col];
    if (fmt_col && !fields[*fmt_col].empty()) {
      request.format_tag = parse_enum<FormatTag>(fields[*fmt_col]);
    }
    if (label_col && !fields[*label_col].empty()) {
      request.label = parse_number(fields[*label_col], row, "label");
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i].rfind("cfg.", 0) == 0) {
        request.provenance.sensor_config[header[i].substr(4)] = fields[i];
      }
    }
    for (std::size_t col : feature_cols) {
      if (fields[col].empty()) {
        request.payload.emplace_back(std::nullopt);
      } else {
        request.payload.emplace_back(parse_number(fields[col], row, header[col]));
      }
    }
    out.push_back(std::move(request));
  }
  return out;
}

IngestRequest parse_ingest_item(const Json& item) {
  if (!item.is_object()) throw_validation("ingest item must be an object");
  IngestRequest request;
  request.payload = payload_from_json(item.at("payload"));
  const Json& prov = item.at("provenance");
  request.provenance = prov.get<Provenance>();
  if (prov.contains("captured_at")) {
    request.captured_at = prov["captured_at"].get<std::string>();
  } else if (prov.contains("t")) {
    request.captured_at = prov["t"].get<std::string>();
  } else if (item.contains("captured_at")) {
    request.captured_at = item["captured_at"].get<std::string>();
  } else {
    throw_validation("provenance.captured_at is required");
  }
  if (auto it = item.find("format_tag"); it != item.end() && !it->is_null()) {
    request.format_tag = parse_enum<FormatTag>(it->get<std::string>());
  }
  if (auto it = item.find("label"); it != item.end() && !it->is_null()) {
    request.label = it->get<double>();
  }
  return request;
}

std::vector<IngestRequest> parse_json_ingest(const Json& doc) {
  if (!doc.is_array()) throw_validation("JSON ingest expects an array of samples");
  std::vector<IngestRequest> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(parse_ingest_item(doc[i]));
    } catch (const Error& e) {
      throw_validation("JSON item " + std::to_string(i) + ": " + e.what());
    } catch (const Json::exception& e) {
      throw_validation("JSON item " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace xmlops
