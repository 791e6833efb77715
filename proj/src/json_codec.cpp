#include "chromatwin/json_codec.hpp"

#include "chromatwin/errors.hpp"

namespace chromatwin {

using nlohmann::json;

namespace {

template <typename T>
T required(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null())
        throw ValidationError(std::string("missing field '") + key + "'", {key});
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + key + "' has the wrong type", {key});
    }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return required<T>(j, key);
}

json optional_to_json(const std::optional<std::string>& v) {
    return v ? json(*v) : json(nullptr);
}

Recipe recipe_from(const json& j) {
    return {required<int>(j, "red"), required<int>(j, "yellow"), required<int>(j, "blue"),
            required<int>(j, "green")};
}

json scored_to_json(const ScoredRecipe& s) {
    json j;
    j["red"] = s.recipe.red;
    j["yellow"] = s.recipe.yellow;
    j["blue"] = s.recipe.blue;
    j["green"] = s.recipe.green;
    j["predicted_rgb"] = {s.predicted.mean.r, s.predicted.mean.g, s.predicted.mean.b};
    j["predicted_std"] = {s.predicted.stddev[0], s.predicted.stddev[1], s.predicted.stddev[2]};
    j["score"] = s.score;
    j["already_tested"] = s.already_tested;
    j["candidates_evaluated"] = s.candidates_evaluated;
    return j;
}

ScoredRecipe scored_from_json(const json& j) {
    ScoredRecipe s;
    s.recipe = recipe_from(j);
    const auto rgb = required<std::vector<double>>(j, "predicted_rgb");
    const auto sd = required<std::vector<double>>(j, "predicted_std");
    if (rgb.size() != 3 || sd.size() != 3)
        throw ValidationError("predicted_rgb and predicted_std need three entries", {"predicted_rgb"});
    s.predicted.mean = {rgb[0], rgb[1], rgb[2]};
    s.predicted.stddev = {sd[0], sd[1], sd[2]};
    s.score = required<double>(j, "score");
    s.already_tested = required<bool>(j, "already_tested");
    s.candidates_evaluated = required<std::size_t>(j, "candidates_evaluated");
    return s;
}

} // namespace

json record_to_json(const ExperimentRecord& r) {
    return {
        {"id", r.id},
        {"red", r.recipe.red},
        {"yellow", r.recipe.yellow},
        {"blue", r.recipe.blue},
        {"green", r.recipe.green},
        {"r", r.measured.r},
        {"g", r.measured.g},
        {"b", r.measured.b},
        {"contributor", r.contributor},
        {"institution", r.institution},
        {"timestamp", r.timestamp},
        {"source", std::string(to_string(r.source))},
        {"campaign_tag", optional_to_json(r.campaign_tag)},
        {"image_digest", optional_to_json(r.image_digest)},
    };
}

ExperimentRecord record_from_json(const json& j) {
    ExperimentRecord r;
    r.id = required<std::uint64_t>(j, "id");
    r.recipe = recipe_from(j);
    r.measured = {required<double>(j, "r"), required<double>(j, "g"), required<double>(j, "b")};
    r.contributor = required<std::string>(j, "contributor");
    r.institution = required<std::string>(j, "institution");
    r.timestamp = required<std::int64_t>(j, "timestamp");
    r.source = parse_record_source(required<std::string>(j, "source"));
    r.campaign_tag = optional_field<std::string>(j, "campaign_tag");
    r.image_digest = optional_field<std::string>(j, "image_digest");
    return r;
}

NewRecord new_record_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("record body must be a JSON object");
    NewRecord r;
    r.recipe = recipe_from(j);
    r.measured = {required<double>(j, "r"), required<double>(j, "g"), required<double>(j, "b")};
    r.contributor = optional_field<std::string>(j, "contributor").value_or("");
    r.institution = optional_field<std::string>(j, "institution").value_or("");
    if (auto s = optional_field<std::string>(j, "source")) r.source = parse_record_source(*s);
    r.campaign_tag = optional_field<std::string>(j, "campaign_tag");
    r.image_digest = optional_field<std::string>(j, "image_digest");
    return r;
}

json filter_to_json(const RecordFilter& f) {
    json j = json::object();
    if (f.contributor) j["contributor"] = *f.contributor;
    if (f.institution) j["institution"] = *f.institution;
    if (f.campaign_tag) j["campaign"] = *f.campaign_tag;
    if (f.since) j["since"] = *f.since;
    if (f.until) j["until"] = *f.until;
    if (f.source) j["source"] = std::string(to_string(*f.source));
    return j;
}

RecordFilter filter_from_json(const json& j) {
    RecordFilter f;
    if (j.is_null()) return f;
    if (!j.is_object()) throw ValidationError("filter must be a JSON object", {"filter"});
    f.contributor = optional_field<std::string>(j, "contributor");
    f.institution = optional_field<std::string>(j, "institution");
    f.campaign_tag = optional_field<std::string>(j, "campaign");
    if (!f.campaign_tag) f.campaign_tag = optional_field<std::string>(j, "campaign_tag");
    f.since = optional_field<std::int64_t>(j, "since");
    f.until = optional_field<std::int64_t>(j, "until");
    if (auto s = optional_field<std::string>(j, "source")) f.source = parse_record_source(*s);
    return f;
}

json suggestion_to_json(const SuggestionPair& s) {
    json kernels = json::array();
    for (const auto& p : s.params)
        kernels.push_back({{"signal_variance", p.signal_variance},
                           {"length_scale", p.length_scale},
                           {"noise_variance", p.noise_variance}});
    return {
        {"optimal", scored_to_json(s.optimal)},
        {"exploration", scored_to_json(s.exploration)},
        {"training_size", s.training_size},
        {"kernel", kernels},
    };
}

SuggestionPair suggestion_from_json(const json& j) {
    SuggestionPair s;
    s.optimal = scored_from_json(j.at("optimal"));
    s.exploration = scored_from_json(j.at("exploration"));
    s.training_size = required<std::size_t>(j, "training_size");
    const auto& kernels = j.at("kernel");
    for (std::size_t ch = 0; ch < s.params.size() && ch < kernels.size(); ++ch) {
        s.params[ch].signal_variance = required<double>(kernels[ch], "signal_variance");
        s.params[ch].length_scale = required<double>(kernels[ch], "length_scale");
        s.params[ch].noise_variance = required<double>(kernels[ch], "noise_variance");
    }
    return s;
}

} // namespace chromatwin
