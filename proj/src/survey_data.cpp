#include "modeshift/survey_data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "modeshift/error.hpp"

namespace modeshift {

namespace {

struct FieldInfo {
  Field field;
  std::string_view name;
  bool binary;
  bool nullable;
};

constexpr std::array<FieldInfo, 21> kFields{{
    {Field::kInformed, "informed", true, false},
    {Field::kUsedPt, "used_pt", true, false},
    {Field::kUsedOffer, "used_offer", true, false},
    {Field::kHotelRatioInformed, "hotel_ratio_informed", false, false},
    {Field::kHolidayFlat, "holiday_flat", true, false},
    {Field::kTrainAccess, "train_access", true, false},
    {Field::kAlone, "alone", true, false},
    {Field::kFamily, "family", true, false},
    {Field::kPurposeNature, "purpose_nature", true, false},
    {Field::kLengthOfStay, "length_of_stay", false, false},
    {Field::kDistanceCarKm, "distance_car_km", false, false},
    {Field::kTtDiffMin, "tt_diff_min", false, true},
    {Field::kSwissResidence, "swiss_residence", true, false},
    {Field::kCarOwner, "car_owner", true, true},
    {Field::kHalfFare, "half_fare", true, false},
    {Field::kGaTravelcard, "ga_travelcard", true, false},
    {Field::kAge, "age", false, true},
    {Field::kWoman, "woman", true, true},
    {Field::kHighIncome, "high_income", true, true},
    {Field::kAwareAtBooking, "aware_at_booking", true, false},
    {Field::kAdjustedStay, "adjusted_stay", true, false},
}};

const FieldInfo& info(Field field) { return kFields[static_cast<std::size_t>(field)]; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t row) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::string(trim(cell)));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) throw ParseError(row, "unterminated quote");
  cells.push_back(std::string(trim(cell)));
  return cells;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_number(std::string_view cell, std::string_view field, std::size_t row) {
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw ParseError(row, "field '" + std::string(field) + "' is not a number: '" +
                              std::string(cell) + "'");
  }
  return v;
}

bool parse_binary(std::string_view cell, std::string_view field, std::size_t row) {
  if (cell == "0") return false;
  if (cell == "1") return true;
  const double v = parse_number(cell, field, row);
  throw RangeError(std::string(field), row,
                   "binary value must be 0 or 1, got " + format_double(v));
}

int parse_int(std::string_view cell, std::string_view field, std::size_t row) {
  int v = 0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    const double d = parse_number(cell, field, row);
    throw RangeError(std::string(field), row,
                     "expected a whole number of nights, got " + format_double(d));
  }
  return v;
}

void require(bool ok, Field field, std::size_t row, const std::string& what) {
  if (!ok) throw RangeError(std::string(field_name(field)), row, what);
}

}  // namespace

std::string_view region_name(Region region) {
  switch (region) {
    case Region::kAppenzellInnerrhoden:
      return "AppenzellInnerrhoden";
    case Region::kAusserrhodenToggenburg:
      return "AusserrhodenToggenburg";
  }
  return "";
}

std::optional<Region> region_from_name(std::string_view name) {
  if (name == "AppenzellInnerrhoden") return Region::kAppenzellInnerrhoden;
  if (name == "AusserrhodenToggenburg") return Region::kAusserrhodenToggenburg;
  return std::nullopt;
}

bool GuestRecord::has_missing() const {
  return !tt_diff_min || !car_owner || !age || !woman || !high_income;
}

std::string_view field_name(Field field) { return info(field).name; }

std::optional<Field> field_from_name(std::string_view name) {
  for (const auto& f : kFields) {
    if (f.name == name) return f.field;
  }
  return std::nullopt;
}

const std::vector<Field>& all_fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> out;
    for (const auto& f : kFields) out.push_back(f.field);
    return out;
  }();
  return fields;
}

bool is_binary(Field field) { return info(field).binary; }
bool is_nullable(Field field) { return info(field).nullable; }

const std::vector<Field>& nullable_fields() {
  static const std::vector<Field> fields{Field::kAge, Field::kTtDiffMin, Field::kCarOwner,
                                         Field::kWoman, Field::kHighIncome};
  return fields;
}

const std::vector<Field>& default_covariates() {
  static const std::vector<Field> fields{
      Field::kHotelRatioInformed, Field::kHolidayFlat,   Field::kTrainAccess,
      Field::kAlone,              Field::kFamily,        Field::kPurposeNature,
      Field::kLengthOfStay,       Field::kDistanceCarKm, Field::kTtDiffMin,
      Field::kSwissResidence,     Field::kCarOwner,      Field::kHalfFare,
      Field::kAge,                Field::kWoman,         Field::kHighIncome,
  };
  return fields;
}

std::vector<std::string> field_names(std::span<const Field> fields) {
  std::vector<std::string> names;
  names.reserve(fields.size());
  for (Field f : fields) names.emplace_back(field_name(f));
  return names;
}

std::optional<double> field_value(const GuestRecord& r, Field field) {
  auto b = [](bool v) { return v ? 1.0 : 0.0; };
  auto ob = [](const std::optional<bool>& v) -> std::optional<double> {
    if (!v) return std::nullopt;
    return *v ? 1.0 : 0.0;
  };
  switch (field) {
    case Field::kInformed: return b(r.informed);
    case Field::kUsedPt: return b(r.used_pt);
    case Field::kUsedOffer: return b(r.used_offer);
    case Field::kHotelRatioInformed: return r.hotel_ratio_informed;
    case Field::kHolidayFlat: return b(r.holiday_flat);
    case Field::kTrainAccess: return b(r.train_access);
    case Field::kAlone: return b(r.alone);
    case Field::kFamily: return b(r.family);
    case Field::kPurposeNature: return b(r.purpose_nature);
    case Field::kLengthOfStay: return static_cast<double>(r.length_of_stay);
    case Field::kDistanceCarKm: return r.distance_car_km;
    case Field::kTtDiffMin: return r.tt_diff_min;
    case Field::kSwissResidence: return b(r.swiss_residence);
    case Field::kCarOwner: return ob(r.car_owner);
    case Field::kHalfFare: return b(r.half_fare);
    case Field::kGaTravelcard: return b(r.ga_travelcard);
    case Field::kAge: return r.age;
    case Field::kWoman: return ob(r.woman);
    case Field::kHighIncome: return ob(r.high_income);
    case Field::kAwareAtBooking: return b(r.aware_at_booking);
    case Field::kAdjustedStay: return b(r.adjusted_stay);
  }
  return std::nullopt;
}

void set_field(GuestRecord& r, Field field, std::optional<double> value) {
  if (!value && !is_nullable(field)) {
    throw ValidationError("field '" + std::string(field_name(field)) +
                          "' may not be missing");
  }
  auto b = [&] { return *value >= 0.5; };
  auto ob = [&]() -> std::optional<bool> {
    if (!value) return std::nullopt;
    return *value >= 0.5;
  };
  switch (field) {
    case Field::kInformed: r.informed = b(); break;
    case Field::kUsedPt: r.used_pt = b(); break;
    case Field::kUsedOffer: r.used_offer = b(); break;
    case Field::kHotelRatioInformed: r.hotel_ratio_informed = *value; break;
    case Field::kHolidayFlat: r.holiday_flat = b(); break;
    case Field::kTrainAccess: r.train_access = b(); break;
    case Field::kAlone: r.alone = b(); break;
    case Field::kFamily: r.family = b(); break;
    case Field::kPurposeNature: r.purpose_nature = b(); break;
    case Field::kLengthOfStay: r.length_of_stay = static_cast<int>(std::lround(*value)); break;
    case Field::kDistanceCarKm: r.distance_car_km = *value; break;
    case Field::kTtDiffMin: r.tt_diff_min = value; break;
    case Field::kSwissResidence: r.swiss_residence = b(); break;
    case Field::kCarOwner: r.car_owner = ob(); break;
    case Field::kHalfFare: r.half_fare = b(); break;
    case Field::kGaTravelcard: r.ga_travelcard = b(); break;
    case Field::kAge: r.age = value; break;
    case Field::kWoman: r.woman = ob(); break;
    case Field::kHighIncome: r.high_income = ob(); break;
    case Field::kAwareAtBooking: r.aware_at_booking = b(); break;
    case Field::kAdjustedStay: r.adjusted_stay = b(); break;
  }
}

void validate_record(const GuestRecord& r, std::size_t row) {
  if (r.id.empty()) throw ParseError(row, "empty id");
  require(r.hotel_ratio_informed >= 0.0 && r.hotel_ratio_informed <= 1.0,
          Field::kHotelRatioInformed, row,
          "must lie in [0, 1], got " + format_double(r.hotel_ratio_informed));
  require(std::isfinite(r.distance_car_km) && r.distance_car_km >= 0.0,
          Field::kDistanceCarKm, row,
          "must be nonnegative, got " + format_double(r.distance_car_km));
  require(r.length_of_stay >= 1, Field::kLengthOfStay, row,
          "must be at least 1, got " + std::to_string(r.length_of_stay));
  if (r.age) {
    require(std::isfinite(*r.age) && *r.age >= 0.0, Field::kAge, row,
            "must be nonnegative, got " + format_double(*r.age));
  }
  if (r.tt_diff_min) {
    require(std::isfinite(*r.tt_diff_min), Field::kTtDiffMin, row, "must be finite");
  }
  require(!r.used_offer || r.informed || r.aware_at_booking, Field::kUsedOffer, row,
          "offer used by a guest neither informed nor aware at booking");
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<GuestRecord> records, std::string provenance,
                 std::vector<FilterLogEntry> filter_log)
    : records_(std::move(records)),
      provenance_(std::move(provenance)),
      filter_log_(std::move(filter_log)) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    validate_record(records_[i], i + 1);
    if (!seen.insert(records_[i].id).second) throw DuplicateIdError(records_[i].id);
  }
}

std::size_t Dataset::treated_count() const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [](const GuestRecord& r) { return r.informed; }));
}

std::size_t Dataset::total_dropped() const {
  std::size_t total = 0;
  for (const auto& e : filter_log_) total += e.dropped_ids.size();
  return total;
}

Dataset Dataset::sorted_by_id() const {
  Dataset out = *this;
  std::sort(out.records_.begin(), out.records_.end(),
            [](const GuestRecord& a, const GuestRecord& b) { return a.id < b.id; });
  return out;
}

Dataset Dataset::retain(std::span<const std::size_t> keep, const std::string& rule) const {
  std::vector<bool> kept(records_.size(), false);
  for (std::size_t i : keep) kept.at(i) = true;
  Dataset out;
  out.provenance_ = provenance_;
  out.filter_log_ = filter_log_;
  std::vector<std::string> dropped;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (kept[i]) {
      out.records_.push_back(records_[i]);
    } else {
      dropped.push_back(records_[i].id);
    }
  }
  if (!dropped.empty()) {
    auto it = std::find_if(out.filter_log_.begin(), out.filter_log_.end(),
                           [&](const FilterLogEntry& e) { return e.rule == rule; });
    if (it == out.filter_log_.end()) {
      out.filter_log_.push_back({rule, std::move(dropped)});
    } else {
      it->dropped_ids.insert(it->dropped_ids.end(), dropped.begin(), dropped.end());
    }
  }
  return out;
}

Dataset Dataset::with_records(std::vector<GuestRecord> records) const {
  if (records.size() != records_.size()) {
    throw ValidationError("replacement records differ in count");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].id != records_[i].id) {
      throw ValidationError("replacement record id mismatch at position " +
                            std::to_string(i));
    }
  }
  return Dataset(std::move(records), provenance_, filter_log_);
}

// ---------------------------------------------------------------------------
// CSV

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c{"id"};
    for (const auto& f : kFields) {
      c.emplace_back(f.name);
    }
    c.emplace_back("region");
    return c;
  }();
  return columns;
}

Dataset parse_dataset(std::istream& in, const ParseOptions& options) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) {
    throw ParseError(1, "missing header row");
  }
  // Strip a UTF-8 byte-order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv_line(line, line_no);

  constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  std::size_t id_col = kAbsent, region_col = kAbsent;
  std::array<std::size_t, kFields.size()> field_col;
  field_col.fill(kAbsent);
  std::set<std::string> seen_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (!seen_names.insert(name).second) {
      throw ParseError(line_no, "duplicate column '" + name + "'");
    }
    if (name == "id") {
      id_col = c;
    } else if (name == "region") {
      region_col = c;
    } else if (auto f = field_from_name(name)) {
      field_col[static_cast<std::size_t>(*f)] = c;
    } else if (!options.allow_extra_columns) {
      throw ParseError(line_no, "unknown column '" + name + "'");
    }
  }
  if (id_col == kAbsent) throw ParseError(line_no, "missing column 'id'");
  if (region_col == kAbsent) throw ParseError(line_no, "missing column 'region'");
  for (const auto& f : kFields) {
    if (field_col[static_cast<std::size_t>(f.field)] == kAbsent) {
      throw ParseError(line_no, "missing column '" + std::string(f.name) + "'");
    }
  }

  std::vector<GuestRecord> records;
  std::unordered_set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line, line_no);
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                    " cells, found " + std::to_string(cells.size()));
    }
    GuestRecord r;
    r.id = cells[id_col];
    if (r.id.empty()) throw ParseError(line_no, "empty id");
    const auto region = region_from_name(cells[region_col]);
    if (!region) {
      throw RangeError("region", line_no, "unknown region '" + cells[region_col] + "'");
    }
    r.region = *region;
    for (const auto& f : kFields) {
      const std::string& cell = cells[field_col[static_cast<std::size_t>(f.field)]];
      if (cell.empty()) {
        if (!f.nullable) {
          throw ParseError(line_no, "field '" + std::string(f.name) + "' is empty");
        }
        set_field(r, f.field, std::nullopt);
        continue;
      }
      double value;
      if (f.binary) {
        value = parse_binary(cell, f.name, line_no) ? 1.0 : 0.0;
      } else if (f.field == Field::kLengthOfStay) {
        value = parse_int(cell, f.name, line_no);
      } else {
        value = parse_number(cell, f.name, line_no);
      }
      set_field(r, f.field, value);
    }
    validate_record(r, line_no);
    if (!ids.insert(r.id).second) throw DuplicateIdError(r.id);
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records), options.provenance);
}

Dataset load_dataset(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file " + path.string());
  ParseOptions opts = options;
  if (opts.provenance == "csv") opts.provenance = path.filename().string();
  return parse_dataset(in, opts);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  const auto& cols = csv_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out << (c ? "," : "") << cols[c];
  }
  out << '\n';
  for (const auto& r : data.records()) {
    out << r.id;
    for (const auto& f : kFields) {
      out << ',';
      const auto v = field_value(r, f.field);
      if (!v) continue;
      if (f.binary || f.field == Field::kLengthOfStay) {
        out << static_cast<long long>(*v);
      } else {
        out << format_double(*v);
      }
    }
    out << ',' << region_name(r.region) << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_dataset(out, data);
}

// ---------------------------------------------------------------------------
// Filters

void validate(const FilterConfig& config) {
  if (!(config.max_distance_km > 0.0)) {
    throw ValidationError("max_distance_km must be positive");
  }
  if (config.min_nights < 1) throw ValidationError("min_nights must be at least 1");
}

Dataset apply_eligibility_filters(const Dataset& data, const FilterConfig& config) {
  validate(config);
  // Per-rule retention applied in the fixed order keeps drop attribution
  // with the first matching rule.
  auto pass = [](const Dataset& d, std::string_view rule, auto&& drop) {
    std::vector<std::size_t> keep;
    keep.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!drop(d[i])) keep.push_back(i);
    }
    return d.retain(keep, std::string(rule));
  };
  Dataset out = pass(data, kRuleMinNights, [&](const GuestRecord& r) {
    return r.length_of_stay < config.min_nights;
  });
  if (config.require_not_aware_at_booking) {
    out = pass(out, kRuleAwareAtBooking,
               [](const GuestRecord& r) { return r.aware_at_booking; });
  }
  if (config.drop_ga) {
    out = pass(out, kRuleGaTravelcard, [](const GuestRecord& r) { return r.ga_travelcard; });
  }
  out = pass(out, kRuleMaxDistance, [&](const GuestRecord& r) {
    return r.distance_car_km > config.max_distance_km;
  });
  if (config.drop_adjusted_stay) {
    out = pass(out, kRuleAdjustedStay, [](const GuestRecord& r) { return r.adjusted_stay; });
  }
  if (config.missing_policy == MissingPolicy::kCompleteCase) {
    out = pass(out, kRuleMissing, [](const GuestRecord& r) { return r.has_missing(); });
  }
  return out;
}

Dataset select_control_region(const Dataset& data, Region control_region) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    const bool ok = r.informed ? r.region == Region::kAppenzellInnerrhoden
                               : r.region == control_region;
    if (ok) keep.push_back(i);
  }
  return data.retain(keep, std::string(kRuleRegion));
}

// ---------------------------------------------------------------------------
// Descriptives

const std::vector<Field>& summary_fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f = default_covariates();
    f.push_back(Field::kUsedPt);
    f.push_back(Field::kUsedOffer);
    return f;
  }();
  return fields;
}

TreatmentSummary summarize_by_treatment(const Dataset& data) {
  TreatmentSummary summary;
  summary.n_treated = data.treated_count();
  summary.n_control = data.control_count();
  if (summary.n_treated == 0) throw EstimationError("treated (informed) group is empty");
  if (summary.n_control == 0) throw EstimationError("control (uninformed) group is empty");

  auto group_stats = [](const std::vector<double>& v, double& mean, double& sd) {
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = v.empty() ? std::nan("") : sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() < 2 ? std::nan("") : std::sqrt(ss / static_cast<double>(v.size() - 1));
  };

  for (Field field : summary_fields()) {
    std::vector<double> treated, control;
    for (const auto& r : data.records()) {
      const auto v = field_value(r, field);
      if (!v) continue;
      (r.informed ? treated : control).push_back(*v);
    }
    FieldSummary row{field};
    group_stats(treated, row.mean_treated, row.sd_treated);
    group_stats(control, row.mean_control, row.sd_control);
    row.n_treated = treated.size();
    row.n_control = control.size();
    summary.rows.push_back(row);
  }
  return summary;
}

Eigen::MatrixXd covariate_matrix(const Dataset& data, std::span<const Field> fields) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()),
                    static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto v = field_value(data[i], fields[j]);
      if (!v) {
        throw EstimationError("record '" + data[i].id + "' is missing '" +
                              std::string(field_name(fields[j])) + "'");
      }
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return x;
}

BoolArray treatment_flags(const Dataset& data) {
  BoolArray flags(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) flags[i] = data[i].informed;
  return flags;
}

Eigen::VectorXd treatment_vector(const Dataset& data) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) w(static_cast<Eigen::Index>(i)) = data[i].informed;
  return w;
}

Eigen::VectorXd outcome_vector(const Dataset& data) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) y(static_cast<Eigen::Index>(i)) = data[i].used_pt;
  return y;
}

// ---------------------------------------------------------------------------
// Travel enrichment

namespace {
std::string route_key(std::string_view origin, std::string_view destination) {
  std::string key(origin);
  key.push_back('\x1f');
  key.append(destination);
  return key;
}
}  // namespace

LookupTableProvider LookupTableProvider::from_csv(std::istream& in) {
  LookupTableProvider provider;
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  const auto header = split_csv_line(line, row);
  const std::vector<std::string> expected{"origin", "destination", "distance_car_km",
                                          "tt_diff_min"};
  if (header != expected) {
    throw ParseError(1, "lookup header must be origin,destination,distance_car_km,tt_diff_min");
  }
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line, row);
    if (cells.size() != 4) throw ParseError(row, "expected 4 cells");
    TravelInfo t{parse_number(cells[2], "distance_car_km", row),
                 parse_number(cells[3], "tt_diff_min", row)};
    if (t.distance_car_km < 0.0) {
      throw RangeError("distance_car_km", row, "must be nonnegative");
    }
    provider.add(cells[0], cells[1], t);
  }
  return provider;
}

void LookupTableProvider::add(std::string origin, std::string destination, TravelInfo info) {
  table_[route_key(origin, destination)] = info;
}

std::optional<TravelInfo> LookupTableProvider::lookup(std::string_view origin,
                                                      std::string_view destination) const {
  auto it = table_.find(route_key(origin, destination));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

Dataset enrich_travel(const Dataset& data, std::span<const TripEndpoints> trips,
                      const TravelProvider& provider) {
  std::unordered_map<std::string_view, const TripEndpoints*> by_id;
  for (const auto& t : trips) by_id[t.id] = &t;
  std::vector<GuestRecord> records = data.records();
  for (auto& r : records) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) continue;
    const auto found = provider.lookup(it->second->origin_postcode,
                                       it->second->destination_postcode);
    if (found) {
      r.distance_car_km = found->distance_car_km;
      r.tt_diff_min = found->tt_diff_min;
    } else {
      r.tt_diff_min.reset();
    }
  }
  return data.with_records(std::move(records));
}

}  // namespace modeshift
