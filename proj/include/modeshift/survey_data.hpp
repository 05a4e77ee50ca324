#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace modeshift {

enum class Region { kAppenzellInnerrhoden, kAusserrhodenToggenburg };

std::string_view region_name(Region region);
std::optional<Region> region_from_name(std::string_view name);

// One survey respondent. Binary fields are stored as bool, so the 0/1
// invariant holds by construction; optional fields are the ones the survey
// left blank for some respondents.
struct GuestRecord {
  std::string id;
  bool informed = false;  // treatment: the hotelier told the guest about the offer
  bool used_pt = false;   // outcome: travelled by public transport
  bool used_offer = false;
  double hotel_ratio_informed = 0.0;
  bool holiday_flat = false;
  bool train_access = false;
  bool alone = false;
  bool family = false;
  bool purpose_nature = false;
  int length_of_stay = 1;
  double distance_car_km = 0.0;
  std::optional<double> tt_diff_min;
  bool swiss_residence = false;
  std::optional<bool> car_owner;
  bool half_fare = false;
  bool ga_travelcard = false;
  std::optional<double> age;
  std::optional<bool> woman;
  std::optional<bool> high_income;
  bool aware_at_booking = false;
  bool adjusted_stay = false;
  Region region = Region::kAppenzellInnerrhoden;

  bool has_missing() const;
  bool operator==(const GuestRecord&) const = default;
};

// Numeric view over the record fields (every column except id and region).
enum class Field {
  kInformed,
  kUsedPt,
  kUsedOffer,
  kHotelRatioInformed,
  kHolidayFlat,
  kTrainAccess,
  kAlone,
  kFamily,
  kPurposeNature,
  kLengthOfStay,
  kDistanceCarKm,
  kTtDiffMin,
  kSwissResidence,
  kCarOwner,
  kHalfFare,
  kGaTravelcard,
  kAge,
  kWoman,
  kHighIncome,
  kAwareAtBooking,
  kAdjustedStay,
};

std::string_view field_name(Field field);
std::optional<Field> field_from_name(std::string_view name);
const std::vector<Field>& all_fields();
bool is_binary(Field field);
bool is_nullable(Field field);

// The five survey items that may be blank.
const std::vector<Field>& nullable_fields();

// Accommodation, trip, mobility-tool and socio-demographic covariates used by
// the propensity model and the forest. The GA travelcard is excluded because
// the eligibility filter removes its holders, leaving a constant column.
const std::vector<Field>& default_covariates();

std::vector<std::string> field_names(std::span<const Field> fields);

std::optional<double> field_value(const GuestRecord& record, Field field);

// Assigns a value, rounding binaries; throws ValidationError when a
// non-nullable field is cleared.
void set_field(GuestRecord& record, Field field, std::optional<double> value);

// Throws RangeError naming the field and the (1-based data) row.
void validate_record(const GuestRecord& record, std::size_t row);

struct FilterLogEntry {
  std::string rule;
  std::vector<std::string> dropped_ids;

  bool operator==(const FilterLogEntry&) const = default;
};

// Ordered guest records with unique ids plus the provenance and the log of
// every record dropped so far. Immutable once constructed.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<GuestRecord> records, std::string provenance = {},
                   std::vector<FilterLogEntry> filter_log = {});

  const std::vector<GuestRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const GuestRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::string& provenance() const { return provenance_; }
  const std::vector<FilterLogEntry>& filter_log() const { return filter_log_; }

  std::size_t treated_count() const;
  std::size_t control_count() const { return size() - treated_count(); }
  std::size_t total_dropped() const;

  // Records in lexicographic id order; the canonical order estimators use.
  Dataset sorted_by_id() const;

  // Keeps the records at `keep` (ascending); every other record is logged as
  // dropped under `rule`.
  Dataset retain(std::span<const std::size_t> keep, const std::string& rule) const;

  // Same log and provenance with replaced records (ids must match one to one).
  Dataset with_records(std::vector<GuestRecord> records) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<GuestRecord> records_;
  std::string provenance_;
  std::vector<FilterLogEntry> filter_log_;
};

struct ParseOptions {
  bool allow_extra_columns = false;
  std::string provenance = "csv";
};

// Reads the guest CSV schema: header of exact lowercase field names (any
// order), booleans as 0/1, empty cells only for the nullable fields.
Dataset parse_dataset(std::istream& in, const ParseOptions& options = {});
Dataset load_dataset(const std::filesystem::path& path,
                     const ParseOptions& options = {});

// Writes the canonical column order.
void write_dataset(std::ostream& out, const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

const std::vector<std::string>& csv_columns();

enum class MissingPolicy { kCompleteCase, kPassThrough };

struct FilterConfig {
  double max_distance_km = 400.0;
  int min_nights = 3;
  bool require_not_aware_at_booking = true;
  bool drop_ga = true;
  bool drop_adjusted_stay = true;
  MissingPolicy missing_policy = MissingPolicy::kCompleteCase;
};

void validate(const FilterConfig& config);

// Rule names used in the filter log, in application order.
inline constexpr std::string_view kRuleMinNights = "min_nights";
inline constexpr std::string_view kRuleAwareAtBooking = "aware_at_booking";
inline constexpr std::string_view kRuleGaTravelcard = "ga_travelcard";
inline constexpr std::string_view kRuleMaxDistance = "max_distance";
inline constexpr std::string_view kRuleAdjustedStay = "adjusted_stay";
inline constexpr std::string_view kRuleMissing = "missing_values";
inline constexpr std::string_view kRuleRegion = "region";

// Drops, in order: short stays, guests aware at booking, GA holders, trips
// beyond the distance limit, stays adjusted after learning of the offer, and
// (complete-case) records with blanks. A record is attributed to the first
// rule that matches it.
Dataset apply_eligibility_filters(const Dataset& data, const FilterConfig& config);

// Keeps informed guests from the offer region and uninformed guests from
// `control_region`.
Dataset select_control_region(const Dataset& data, Region control_region);

struct FieldSummary {
  Field field;
  double mean_treated = 0.0;
  double sd_treated = 0.0;
  std::size_t n_treated = 0;  // non-missing values
  double mean_control = 0.0;
  double sd_control = 0.0;
  std::size_t n_control = 0;
};

struct TreatmentSummary {
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  std::vector<FieldSummary> rows;
};

// Fields reported by summarize_by_treatment, covariates first, then the
// outcome and offer usage.
const std::vector<Field>& summary_fields();

// Per-group mean and (n - 1) standard deviation over non-missing values.
TreatmentSummary summarize_by_treatment(const Dataset& data);

// Contiguous bool storage; std::vector<bool> cannot back a std::span.
class BoolArray {
 public:
  BoolArray() = default;
  explicit BoolArray(std::size_t n) : values_(new bool[n]()), size_(n) {}
  BoolArray(std::initializer_list<bool> init) : BoolArray(init.size()) {
    std::copy(init.begin(), init.end(), values_.get());
  }
  BoolArray(const BoolArray& other) : BoolArray(other.size_) {
    std::copy(other.values_.get(), other.values_.get() + size_, values_.get());
  }
  BoolArray& operator=(const BoolArray& other) {
    if (this != &other) *this = BoolArray(other);
    return *this;
  }
  BoolArray(BoolArray&&) noexcept = default;
  BoolArray& operator=(BoolArray&&) noexcept = default;

  bool& operator[](std::size_t i) { return values_[i]; }
  bool operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return size_; }
  std::span<const bool> span() const { return {values_.get(), size_}; }
  operator std::span<const bool>() const { return span(); }

 private:
  std::unique_ptr<bool[]> values_;
  std::size_t size_ = 0;
};

BoolArray treatment_flags(const Dataset& data);

// Covariate matrix (rows = records); throws EstimationError on a blank cell.
Eigen::MatrixXd covariate_matrix(const Dataset& data, std::span<const Field> fields);
Eigen::VectorXd treatment_vector(const Dataset& data);
Eigen::VectorXd outcome_vector(const Dataset& data);

// Travel distance / time enrichment from origin and destination postcodes.
struct TravelInfo {
  double distance_car_km = 0.0;
  double tt_diff_min = 0.0;
};

class TravelProvider {
 public:
  virtual ~TravelProvider() = default;
  virtual std::optional<TravelInfo> lookup(std::string_view origin,
                                           std::string_view destination) const = 0;
};

// Offline lookup table with columns origin,destination,distance_car_km,tt_diff_min.
class LookupTableProvider : public TravelProvider {
 public:
  static LookupTableProvider from_csv(std::istream& in);
  void add(std::string origin, std::string destination, TravelInfo info);
  std::optional<TravelInfo> lookup(std::string_view origin,
                                   std::string_view destination) const override;

 private:
  std::unordered_map<std::string, TravelInfo> table_;
};

struct TripEndpoints {
  std::string id;
  std::string origin_postcode;
  std::string destination_postcode;
};

// Fills distance_car_km and tt_diff_min for every record with endpoints.
// Unknown routes leave the travel-time difference blank and keep the distance.
Dataset enrich_travel(const Dataset& data, std::span<const TripEndpoints> trips,
                      const TravelProvider& provider);

}  // namespace modeshift
