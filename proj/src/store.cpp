#include "chromatwin/store.hpp"

#include "chromatwin/errors.hpp"
#include "chromatwin/json_codec.hpp"

#include <zlib.h>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>
#include <mutex>
#include <shared_mutex>

namespace chromatwin {

std::string_view to_string(RecordSource s) {
    switch (s) {
    case RecordSource::Image: return "image";
    case RecordSource::DirectRgb: return "direct-rgb";
    case RecordSource::Simulated: return "simulated";
    }
    return "unknown";
}

RecordSource parse_record_source(std::string_view text) {
    if (text == "image") return RecordSource::Image;
    if (text == "direct-rgb") return RecordSource::DirectRgb;
    if (text == "simulated") return RecordSource::Simulated;
    throw ValidationError("unknown record source '" + std::string(text) + "'", {"source"});
}

bool RecordFilter::matches(const ExperimentRecord& r) const {
    if (contributor && r.contributor != *contributor) return false;
    if (institution && r.institution != *institution) return false;
    if (campaign_tag && r.campaign_tag != *campaign_tag) return false;
    if (since && r.timestamp < *since) return false;
    if (until && r.timestamp > *until) return false;
    if (source && r.source != *source) return false;
    return true;
}

bool RecordFilter::empty() const {
    return !contributor && !institution && !campaign_tag && !since && !until && !source;
}

std::vector<Observation> to_observations(const std::vector<ExperimentRecord>& records) {
    std::vector<Observation> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.observation());
    return out;
}

std::int64_t system_clock_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void validate_record(const NewRecord& r, const DesignSpace& space) {
    std::vector<std::string> bad;
    for (int i = 0; i < kDyeCount; ++i) {
        const int d = r.recipe.drops()[i];
        if (d < 0 || d > space.max_drops()) bad.emplace_back(dye_name(static_cast<Dye>(i)));
    }
    static constexpr const char* channels[] = {"r", "g", "b"};
    for (int ch = 0; ch < kChannelCount; ++ch)
        if (!std::isfinite(r.measured[ch])) bad.emplace_back(channels[ch]);
    if (!bad.empty()) {
        std::string msg = "invalid record fields:";
        for (const auto& f : bad) msg += " " + f;
        throw ValidationError(msg, bad);
    }
}

// ---------------------------------------------------------------------------
// Log file: repeated [u32 length][payload][u32 crc32(payload)], little endian.

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

std::uint32_t checksum(std::string_view payload) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

class LogFile {
public:
    explicit LogFile(std::filesystem::path path) : path_(std::move(path)) {
        fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd_ < 0) throw StorageError("cannot open log " + path_.string() + ": " + std::strerror(errno));
    }
    LogFile(const LogFile&) = delete;
    LogFile& operator=(const LogFile&) = delete;
    ~LogFile() {
        if (fd_ >= 0) ::close(fd_);
    }

    // Replays every intact entry. A torn or corrupt tail (crash mid-append)
    // is truncated away; corruption followed by intact data is an error.
    std::vector<ExperimentRecord> replay() {
        std::string data;
        {
            struct stat st{};
            if (::fstat(fd_, &st) != 0) throw StorageError("cannot stat log: " + std::string(std::strerror(errno)));
            data.resize(static_cast<std::size_t>(st.st_size));
            std::size_t got = 0;
            while (got < data.size()) {
                const ssize_t n = ::pread(fd_, data.data() + got, data.size() - got, static_cast<off_t>(got));
                if (n <= 0) throw StorageError("cannot read log: " + std::string(std::strerror(errno)));
                got += static_cast<std::size_t>(n);
            }
        }
        std::vector<ExperimentRecord> out;
        std::size_t pos = 0;
        while (pos < data.size()) {
            if (data.size() - pos < 8) break;
            const std::uint32_t len = get_u32(data.data() + pos);
            if (data.size() - pos - 8 < len) break;
            const std::string_view payload(data.data() + pos + 4, len);
            if (checksum(payload) != get_u32(data.data() + pos + 4 + len)) {
                if (pos + 8 + len < data.size())
                    throw StorageError("checksum mismatch inside log at offset " + std::to_string(pos));
                break;
            }
            try {
                out.push_back(record_from_json(nlohmann::json::parse(payload)));
            } catch (const std::exception& e) {
                throw StorageError("unreadable log entry at offset " + std::to_string(pos) + ": " + e.what());
            }
            pos += 8 + len;
        }
        if (pos < data.size() && ::ftruncate(fd_, static_cast<off_t>(pos)) != 0)
            throw StorageError("cannot truncate torn log tail: " + std::string(std::strerror(errno)));
        return out;
    }

    void append(const ExperimentRecord& r) {
        const std::string payload = record_to_json(r).dump();
        std::string frame;
        frame.reserve(payload.size() + 8);
        put_u32(frame, static_cast<std::uint32_t>(payload.size()));
        frame += payload;
        put_u32(frame, checksum(payload));
        std::size_t done = 0;
        while (done < frame.size()) {
            const ssize_t n = ::write(fd_, frame.data() + done, frame.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw StorageError("log write failed: " + std::string(std::strerror(errno)));
            }
            done += static_cast<std::size_t>(n);
        }
        if (::fdatasync(fd_) != 0) throw StorageError("log sync failed: " + std::string(std::strerror(errno)));
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

// ---------------------------------------------------------------------------
// CSV

std::string csv_field(std::string_view v) {
    if (v.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(v);
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string shortest(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        CsvRow row;
        row.line = line;
        std::string field;
        bool row_done = false;
        while (!row_done) {
            field.clear();
            if (i < text.size() && text[i] == '"') {
                ++i;
                for (;;) {
                    if (i >= text.size())
                        throw ValidationError("unterminated quoted field at line " + std::to_string(row.line),
                                              {"line " + std::to_string(row.line)});
                    if (text[i] == '"') {
                        if (i + 1 < text.size() && text[i + 1] == '"') {
                            field += '"';
                            i += 2;
                            continue;
                        }
                        ++i;
                        break;
                    }
                    if (text[i] == '\n') ++line;
                    field += text[i++];
                }
            } else {
                while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') field += text[i++];
            }
            row.fields.push_back(field);
            if (i < text.size() && text[i] == ',') {
                ++i;
            } else {
                if (i < text.size() && text[i] == '\r') ++i;
                if (i < text.size() && text[i] == '\n') ++i;
                else if (i < text.size())
                    throw ValidationError("malformed CSV at line " + std::to_string(line),
                                          {"line " + std::to_string(line)});
                ++line;
                row_done = true;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const char* column) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ValidationError("line " + std::to_string(line) + ": bad " + column + " '" + s + "'",
                              {"line " + std::to_string(line)});
    return v;
}

} // namespace

// ---------------------------------------------------------------------------

struct Store::Impl {
    Clock clock;
    DesignSpace space;
    std::unique_ptr<LogFile> log;
    mutable std::shared_mutex mutex;
    std::vector<ExperimentRecord> records;  // id order
    std::uint64_t next_id = 1;

    Impl(Clock c, int max_drops) : clock(std::move(c)), space(max_drops) {
        if (!clock) clock = system_clock_seconds;
    }

    void append_locked(ExperimentRecord r) {
        if (log) log->append(r);
        next_id = r.id + 1;
        records.push_back(std::move(r));
    }
};

Store::Store(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Store::Store(Store&&) noexcept = default;
Store& Store::operator=(Store&&) noexcept = default;
Store::~Store() = default;

Store Store::in_memory(Clock clock, int max_drops) {
    return Store(std::make_unique<Impl>(std::move(clock), max_drops));
}

Store Store::open(const std::filesystem::path& data_dir, Clock clock, int max_drops) {
    std::error_code ec;
    std::filesystem::create_directories(data_dir, ec);
    if (ec) throw StorageError("cannot create data directory " + data_dir.string() + ": " + ec.message());
    auto impl = std::make_unique<Impl>(std::move(clock), max_drops);
    impl->log = std::make_unique<LogFile>(data_dir / "records.log");
    impl->records = impl->log->replay();
    std::uint64_t last = 0;
    for (const auto& r : impl->records) {
        if (r.id <= last) throw StorageError("log ids are not strictly increasing at id " + std::to_string(r.id));
        last = r.id;
    }
    impl->next_id = last + 1;
    return Store(std::move(impl));
}

std::uint64_t Store::submit(const NewRecord& record) {
    validate_record(record, impl_->space);
    std::unique_lock lock(impl_->mutex);
    ExperimentRecord r;
    r.id = impl_->next_id;
    r.recipe = record.recipe;
    r.measured = record.measured;
    r.contributor = record.contributor;
    r.institution = record.institution;
    r.timestamp = impl_->clock();
    r.source = record.source;
    r.image_digest = record.image_digest;
    r.campaign_tag = record.campaign_tag;
    impl_->append_locked(std::move(r));
    return impl_->next_id - 1;
}

std::optional<ExperimentRecord> Store::get(std::uint64_t id) const {
    std::shared_lock lock(impl_->mutex);
    const auto& recs = impl_->records;
    auto it = std::lower_bound(recs.begin(), recs.end(), id,
                               [](const ExperimentRecord& r, std::uint64_t v) { return r.id < v; });
    if (it == recs.end() || it->id != id) return std::nullopt;
    return *it;
}

std::vector<ExperimentRecord> Store::query(const RecordFilter& filter) const {
    std::shared_lock lock(impl_->mutex);
    if (filter.empty()) return impl_->records;
    std::vector<ExperimentRecord> out;
    for (const auto& r : impl_->records)
        if (filter.matches(r)) out.push_back(r);
    return out;
}

std::vector<ExperimentRecord> Store::find_by_recipe(const Recipe& recipe) const {
    std::shared_lock lock(impl_->mutex);
    std::vector<ExperimentRecord> out;
    for (const auto& r : impl_->records)
        if (r.recipe == recipe) out.push_back(r);
    return out;
}

std::size_t Store::size() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->records.size();
}

const DesignSpace& Store::space() const { return impl_->space; }

std::optional<std::filesystem::path> Store::log_path() const {
    if (!impl_->log) return std::nullopt;
    return impl_->log->path();
}

std::string Store::export_csv(const RecordFilter& filter) const {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : query(filter)) {
        out += std::to_string(r.id);
        for (int d : r.recipe.drops()) out += ',' + std::to_string(d);
        for (int ch = 0; ch < kChannelCount; ++ch) out += ',' + shortest(r.measured[ch]);
        out += ',' + csv_field(r.contributor);
        out += ',' + csv_field(r.institution);
        out += ',' + std::to_string(r.timestamp);
        out += ',' + std::string(to_string(r.source));
        out += ',' + csv_field(r.campaign_tag.value_or(""));
        out += '\n';
    }
    return out;
}

std::size_t Store::import_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) return 0;
    std::string header;
    for (std::size_t i = 0; i < rows[0].fields.size(); ++i) header += (i ? "," : "") + rows[0].fields[i];
    if (header != kCsvHeader) throw ValidationError("unexpected CSV header at line 1", {"line 1"});

    std::vector<ExperimentRecord> parsed;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& row = rows[k];
        const std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != 13)
            throw ValidationError(where + ": expected 13 fields, found " + std::to_string(row.fields.size()),
                                  {where});
        const auto& f = row.fields;
        ExperimentRecord r;
        r.id = parse_number<std::uint64_t>(f[0], row.line, "id");
        r.recipe = {parse_number<int>(f[1], row.line, "red"), parse_number<int>(f[2], row.line, "yellow"),
                    parse_number<int>(f[3], row.line, "blue"), parse_number<int>(f[4], row.line, "green")};
        r.measured = {parse_number<double>(f[5], row.line, "r"), parse_number<double>(f[6], row.line, "g"),
                      parse_number<double>(f[7], row.line, "b")};
        r.contributor = f[8];
        r.institution = f[9];
        r.timestamp = parse_number<std::int64_t>(f[10], row.line, "timestamp");
        try {
            r.source = parse_record_source(f[11]);
        } catch (const ValidationError&) {
            throw ValidationError(where + ": unknown source '" + f[11] + "'", {where});
        }
        if (!f[12].empty()) r.campaign_tag = f[12];
        try {
            validate_record({r.recipe, r.measured, r.contributor, r.institution, r.source, {}, r.campaign_tag},
                            impl_->space);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what(), {where});
        }
        parsed.push_back(std::move(r));
    }

    std::unique_lock lock(impl_->mutex);
    std::uint64_t last = impl_->next_id - 1;
    for (std::size_t k = 0; k < parsed.size(); ++k) {
        if (parsed[k].id <= last) {
            const std::string where = "line " + std::to_string(rows[k + 1].line);
            throw ValidationError(where + ": id " + std::to_string(parsed[k].id) +
                                      " does not exceed the last stored id",
                                  {where});
        }
        last = parsed[k].id;
    }
    for (auto& r : parsed) impl_->append_locked(std::move(r));
    return parsed.size();
}

} // namespace chromatwin
