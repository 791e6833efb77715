#include "chromatwin/service.hpp"

#include "chromatwin/errors.hpp"
#include "chromatwin/image.hpp"
#include "chromatwin/json_codec.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>

namespace chromatwin {

using nlohmann::json;

SuggestRequest suggest_request_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("suggest body must be a JSON object");
    SuggestRequest r;
    if (!j.contains("target_rgb") || !j.at("target_rgb").is_array() || j.at("target_rgb").size() != 3)
        throw ValidationError("target_rgb must be an array of three numbers", {"target_rgb"});
    double c[3];
    for (std::size_t i = 0; i < 3; ++i) {
        if (!j.at("target_rgb")[i].is_number())
            throw ValidationError("target_rgb must be an array of three numbers", {"target_rgb"});
        c[i] = j.at("target_rgb")[i].get<double>();
    }
    r.target = TargetColor(c[0], c[1], c[2]);
    if (j.contains("filter")) r.filter = filter_from_json(j.at("filter"));
    if (j.contains("max_drops") && !j.at("max_drops").is_null()) {
        if (!j.at("max_drops").is_number_integer()) throw ValidationError("max_drops must be an integer", {"max_drops"});
        r.max_drops = j.at("max_drops").get<int>();
        if (r.max_drops < 1) throw ValidationError("max_drops must be positive", {"max_drops"});
    }
    if (j.contains("hyper") && !j.at("hyper").is_null()) {
        const auto& h = j.at("hyper");
        if (h == "fixed")
            r.hyper = HyperPolicy::fixed_defaults();
        else if (h == "marginal_likelihood")
            r.hyper = HyperPolicy::marginal_likelihood();
        else
            throw ValidationError("hyper must be \"fixed\" or \"marginal_likelihood\"", {"hyper"});
    }
    return r;
}

json suggest_request_to_json(const SuggestRequest& r) {
    return {
        {"target_rgb", {r.target[0], r.target[1], r.target[2]}},
        {"filter", filter_to_json(r.filter)},
        {"max_drops", r.max_drops},
        {"hyper", r.hyper.mode == HyperPolicy::Mode::Fixed ? "fixed" : "marginal_likelihood"},
    };
}

SuggestionPair suggest_from_store(const Store& store, const SuggestRequest& request) {
    const DesignSpace space(request.max_drops);
    const auto records = store.query(request.filter);
    if (records.empty())
        throw EmptyDatasetError("no records match; submit seed experiments before asking for suggestions");
    for (const auto& rec : records)
        if (!space.contains(rec.recipe))
            throw ValidationError("record " + std::to_string(rec.id) + " lies outside a " +
                                      std::to_string(request.max_drops) + "-drop design space",
                                  {"max_drops"});
    const auto obs = to_observations(records);
    return suggest(obs, request.target, space, request.hyper);
}

SubmitOutcome submit_with_repeats(Store& store, const NewRecord& record) {
    SubmitOutcome out;
    for (const auto& r : store.find_by_recipe(record.recipe)) out.repeats.push_back(r.id);
    out.id = store.submit(record);
    return out;
}

IngestOutcome ingest_photo(Store& store, std::span<const std::uint8_t> photo_bytes, NewRecord meta,
                           const vision::TemplateGeometry& g) {
    validate_recipe(meta.recipe, store.space());
    const Image photo = decode_image(photo_bytes);
    IngestOutcome out;
    out.measurement = vision::process_submission(photo, g);
    meta.measured = out.measurement.rgb;
    meta.source = RecordSource::Image;
    meta.image_digest = content_digest(photo_bytes);
    out.submitted = submit_with_repeats(store, meta);
    return out;
}

json diagnostics_to_json(const vision::Diagnostics& d) {
    return {
        {"markers_found", d.markers_found},
        {"marker_ids", d.marker_ids},
        {"reprojection_rms", d.reprojection_rms},
        {"threshold", d.threshold},
        {"roi_pixels", d.roi_pixels},
        {"flagged_pixels", d.flagged_pixels},
        {"color_correction", d.color_correction ? json(*d.color_correction) : json(nullptr)},
    };
}

std::pair<int, json> error_response(const std::exception& e) {
    if (const auto* v = dynamic_cast<const VisionRejection*>(&e))
        return {422, {{"error", "vision_rejection"}, {"message", e.what()}, {"markers_found", v->markers_found()}}};
    if (const auto* v = dynamic_cast<const ValidationError*>(&e))
        return {400, {{"error", "validation"}, {"message", e.what()}, {"fields", v->fields()}}};
    if (dynamic_cast<const EmptyDatasetError*>(&e))
        return {409, {{"error", "empty_dataset"}, {"message", e.what()}}};
    if (dynamic_cast<const StorageError*>(&e)) return {500, {{"error", "storage"}, {"message", e.what()}}};
    if (dynamic_cast<const FactorizationError*>(&e)) return {500, {{"error", "model"}, {"message", e.what()}}};
    if (dynamic_cast<const json::exception*>(&e))
        return {400, {{"error", "validation"}, {"message", std::string("malformed JSON: ") + e.what()}}};
    return {500, {{"error", "internal"}, {"message", e.what()}}};
}

std::optional<std::string> data_dir_from_env() {
    const char* v = std::getenv("CHROMATWIN_DATA_DIR");
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

namespace {

json submit_json(const SubmitOutcome& s) {
    return {{"id", s.id}, {"repeat", !s.repeats.empty()}, {"repeat_of", s.repeats}};
}

RecordFilter filter_from_query(const httplib::Request& req) {
    json j = json::object();
    for (const char* key : {"contributor", "institution", "campaign", "source"})
        if (req.has_param(key)) j[key] = req.get_param_value(key);
    for (const char* key : {"since", "until"}) {
        if (!req.has_param(key)) continue;
        const std::string v = req.get_param_value(key);
        std::size_t used = 0;
        long long n = 0;
        try {
            n = std::stoll(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != v.size())
            throw ValidationError(std::string(key) + " must be an integer timestamp", {key});
        j[key] = n;
    }
    return filter_from_json(j);
}

std::string form_field(const httplib::Request& req, const char* key) {
    return req.has_file(key) ? req.get_file_value(key).content : std::string();
}

} // namespace

struct Service::Impl {
    Store& store;
    httplib::Server server;
    std::atomic<bool> bound{false};

    explicit Impl(Store& s) : store(s) {
        // No SO_REUSEPORT: a second server on a busy port must fail to bind.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });
        routes();
    }

    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            auto [status, body] = error_response(e);
            res.status = status;
            res.set_content(body.dump(), "application/json");
        }
    }

    void routes() {
        server.Post("/records", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const NewRecord rec = new_record_from_json(json::parse(req.body));
                res.set_content(submit_json(submit_with_repeats(store, rec)).dump(), "application/json");
            });
        });

        server.Post("/ingest", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                if (!req.is_multipart_form_data() || !req.has_file("image"))
                    throw ValidationError("expected multipart form with an 'image' part", {"image"});
                NewRecord meta;
                const std::string recipe = form_field(req, "recipe");
                if (recipe.empty()) throw ValidationError("missing field 'recipe'", {"recipe"});
                meta.recipe = parse_recipe(recipe);
                meta.contributor = form_field(req, "contributor");
                meta.institution = form_field(req, "institution");
                if (auto tag = form_field(req, "campaign_tag"); !tag.empty()) meta.campaign_tag = tag;
                const std::string& img = req.get_file_value("image").content;
                const auto out = ingest_photo(
                    store, std::span(reinterpret_cast<const std::uint8_t*>(img.data()), img.size()), meta);
                json body = submit_json(out.submitted);
                const auto& rgb = out.measurement.rgb;
                body["measured_rgb"] = {rgb.r, rgb.g, rgb.b};
                body["diagnostics"] = diagnostics_to_json(out.measurement.diagnostics);
                res.set_content(body.dump(), "application/json");
            });
        });

        server.Get("/records", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                json arr = json::array();
                for (const auto& r : store.query(filter_from_query(req))) arr.push_back(record_to_json(r));
                res.set_content(arr.dump(), "application/json");
            });
        });

        server.Post("/suggest", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto request = suggest_request_from_json(json::parse(req.body));
                res.set_content(suggestion_to_json(suggest_from_store(store, request)).dump(), "application/json");
            });
        });

        server.Get("/export.csv", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { res.set_content(store.export_csv(filter_from_query(req)), "text/csv"); });
        });
    }
};

Service::Service(Store& store) : impl_(std::make_unique<Impl>(store)) {}
Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
    if (port < 0 || port > 65535) throw ValidationError("port must be in 0..65535", {"port"});
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw StorageError("cannot bind " + host + ":" + std::to_string(port));
    impl_->bound = true;
    return bound;
}

void Service::run() {
    if (!impl_->bound) throw StorageError("service is not bound to a port");
    impl_->server.listen_after_bind();
}

void Service::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

} // namespace chromatwin
