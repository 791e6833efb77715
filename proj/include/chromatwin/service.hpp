#pragma once

#include "chromatwin/acquisition.hpp"
#include "chromatwin/store.hpp"
#include "chromatwin/vision.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>

namespace chromatwin {

struct SuggestRequest {
    TargetColor target{0, 0, 0};
    RecordFilter filter;
    int max_drops = kDefaultMaxDrops;
    HyperPolicy hyper{};
};

// {target_rgb: [r,g,b], filter: {...}, max_drops, hyper: "fixed" | "marginal_likelihood"}
SuggestRequest suggest_request_from_json(const nlohmann::json& j);
nlohmann::json suggest_request_to_json(const SuggestRequest& r);

// Trains on the records matching the filter. Throws EmptyDatasetError when
// none match and ValidationError when a matching record lies outside the
// requested design space.
SuggestionPair suggest_from_store(const Store& store, const SuggestRequest& request);

struct SubmitOutcome {
    std::uint64_t id = 0;
    std::vector<std::uint64_t> repeats;  // earlier records with the same recipe
};

SubmitOutcome submit_with_repeats(Store& store, const NewRecord& record);

struct IngestOutcome {
    SubmitOutcome submitted;
    vision::Measurement measurement;
};

// Decodes the photo, measures the ROI and submits it as an image record
// carrying the photo's digest. `meta` supplies recipe and provenance.
IngestOutcome ingest_photo(Store& store, std::span<const std::uint8_t> photo_bytes, NewRecord meta,
                           const vision::TemplateGeometry& g = vision::TemplateGeometry::standard());

nlohmann::json diagnostics_to_json(const vision::Diagnostics& d);

// HTTP front end over a Store. Routes:
//   POST /records      JSON record            -> {id, repeat, repeat_of}
//   POST /ingest       multipart image+fields -> {id, measured_rgb, diagnostics, repeat, repeat_of}
//   GET  /records      query filter           -> [record...]
//   POST /suggest      SuggestRequest         -> SuggestionPair
//   GET  /export.csv                          -> text/csv
// Errors carry {error, message} with 400 validation, 409 empty dataset,
// 422 vision rejection (plus markers_found), 500 storage or model failure.
class Service {
public:
    explicit Service(Store& store);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Port 0 picks a free port. Returns the bound port; throws StorageError
    // when the address cannot be bound.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void run();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Status code and JSON body for an exception raised while handling a request.
std::pair<int, nlohmann::json> error_response(const std::exception& e);

// Data directory from CHROMATWIN_DATA_DIR, if set and non-empty.
std::optional<std::string> data_dir_from_env();

} // namespace chromatwin
