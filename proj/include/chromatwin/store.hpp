#pragma once

#include "chromatwin/acquisition.hpp"
#include "chromatwin/color.hpp"
#include "chromatwin/recipe_space.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chromatwin {

enum class RecordSource { Image, DirectRgb, Simulated };

std::string_view to_string(RecordSource s);
RecordSource parse_record_source(std::string_view text);

// A record as supplied by a contributor; id and timestamp are assigned on
// acceptance.
struct NewRecord {
    Recipe recipe;
    ColorRGB measured;
    std::string contributor;
    std::string institution;
    RecordSource source = RecordSource::DirectRgb;
    std::optional<std::string> image_digest;
    std::optional<std::string> campaign_tag;
};

struct ExperimentRecord {
    std::uint64_t id = 0;
    Recipe recipe;
    ColorRGB measured;
    std::string contributor;
    std::string institution;
    std::int64_t timestamp = 0;  // UTC seconds
    RecordSource source = RecordSource::DirectRgb;
    std::optional<std::string> image_digest;
    std::optional<std::string> campaign_tag;

    Observation observation() const { return {recipe, measured}; }
    bool operator==(const ExperimentRecord&) const = default;
};

// Conjunctive filter; absent clauses match everything. The time range is
// inclusive on both ends.
struct RecordFilter {
    std::optional<std::string> contributor;
    std::optional<std::string> institution;
    std::optional<std::string> campaign_tag;
    std::optional<std::int64_t> since;
    std::optional<std::int64_t> until;
    std::optional<RecordSource> source;

    bool matches(const ExperimentRecord& r) const;
    bool empty() const;
};

std::vector<Observation> to_observations(const std::vector<ExperimentRecord>& records);

inline constexpr std::string_view kCsvHeader =
    "id,red,yellow,blue,green,r,g,b,contributor,institution,timestamp,source,campaign_tag";

// Append-only experiment store. Disk-backed stores keep a single log of
// length-prefixed, checksummed JSON records and rebuild the in-memory index
// on open. Safe for concurrent use: writes are serialized, reads share.
class Store {
public:
    using Clock = std::function<std::int64_t()>;

    static Store in_memory(Clock clock = {}, int max_drops = kDefaultMaxDrops);
    static Store open(const std::filesystem::path& data_dir, Clock clock = {},
                      int max_drops = kDefaultMaxDrops);

    Store(Store&&) noexcept;
    Store& operator=(Store&&) noexcept;
    ~Store();

    // Durable before returning. Throws ValidationError or StorageError.
    std::uint64_t submit(const NewRecord& record);

    std::optional<ExperimentRecord> get(std::uint64_t id) const;
    std::vector<ExperimentRecord> query(const RecordFilter& filter = {}) const;
    std::vector<ExperimentRecord> find_by_recipe(const Recipe& r) const;
    std::size_t size() const;

    std::string export_csv(const RecordFilter& filter = {}) const;
    // Ingests rows keeping their ids and timestamps; ids must exceed every
    // id already stored. All-or-nothing.
    std::size_t import_csv(std::string_view text);

    const DesignSpace& space() const;
    std::optional<std::filesystem::path> log_path() const;

private:
    struct Impl;
    explicit Store(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

void validate_record(const NewRecord& r, const DesignSpace& space);

std::int64_t system_clock_seconds();

} // namespace chromatwin
