#pragma once

// Collection back end: serves the study configuration and keeps submitted
// interval responses in an append-only JSON-lines log.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "intervalrisk/io.hpp"

namespace intervalrisk {

struct SubmittedItem {
    std::string hop_id;
    std::string attribute;
    double lower = 0.0;
    double upper = 0.0;
};

struct SubmissionBatch {
    std::string expert_id;
    std::vector<SubmittedItem> records;
    std::string client_timestamp;
};

inline SubmissionBatch batch_from_json(const json& j) {
    try {
        SubmissionBatch b;
        b.expert_id = j.at("expert_id").get<std::string>();
        b.client_timestamp = j.value("client_timestamp", std::string{});
        for (const auto& r : j.at("records"))
            b.records.push_back({r.at("hop_id").get<std::string>(), r.at("attribute").get<std::string>(),
                                 r.at("lower").get<double>(), r.at("upper").get<double>()});
        return b;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("submission batch: ") + e.what());
    }
}

inline json batch_to_json(const SubmissionBatch& b) {
    json recs = json::array();
    for (const auto& r : b.records)
        recs.push_back({{"hop_id", r.hop_id}, {"attribute", r.attribute}, {"lower", r.lower}, {"upper", r.upper}});
    return {{"expert_id", b.expert_id}, {"records", recs}, {"client_timestamp", b.client_timestamp}};
}

enum class ExportFormat { csv, jsonl };

class StudyService {
public:
    StudyService(std::optional<StudyConfig> config, std::filesystem::path data_dir)
        : config_(std::move(config)), data_dir_(std::move(data_dir)) {}

    const StudyConfig& get_study() const {
        if (!config_) throw Error(ErrorCode::NoStudyLoaded, "service has no study configuration");
        return *config_;
    }

    std::filesystem::path log_path() const {
        const std::string id = config_ ? config_->study_id : std::string("study");
        return data_dir_ / (id + ".responses.jsonl");
    }

    /// Validates the whole batch, then appends it with one write. Either every
    /// record is persisted or none is.
    std::size_t post_responses(const SubmissionBatch& batch) {
        const StudyConfig& cfg = get_study();
        std::vector<RecordViolation> bad;
        std::vector<ResponseRecord> recs;
        if (batch.expert_id.empty()) bad.push_back({0, ErrorCode::ValidationFailed, "expert_id is empty"});
        if (batch.records.empty()) bad.push_back({0, ErrorCode::ValidationFailed, "batch has no records"});
        for (std::size_t i = 0; i < batch.records.size(); ++i) {
            const auto& item = batch.records[i];
            auto code = parse_attribute(item.attribute);
            if (!code) {
                bad.push_back({i, ErrorCode::IllegalAttribute, "unknown attribute '" + item.attribute + "'"});
                continue;
            }
            ResponseRecord rec{batch.expert_id, item.hop_id, *code, {item.lower, item.upper}, {}};
            if (auto v = validate_record(rec, cfg); !v) {
                bad.push_back({i, v.code, v.message});
                continue;
            }
            recs.push_back(std::move(rec));
        }
        if (!bad.empty()) throw ValidationError(std::move(bad));

        std::lock_guard lock(write_mu_);
        Timestamp stamp = Timestamp::now();
        if (stamp <= last_stamp_) stamp.micros = last_stamp_.micros + 1;
        last_stamp_ = stamp;
        std::string buf;
        for (auto& r : recs) {
            r.submitted_at = stamp;
            buf += record_to_json(r).dump() + '\n';
        }
        append_all(buf);
        return recs.size();
    }

    /// Every logged record in log order. A trailing line without its newline
    /// (a write in progress) is ignored.
    std::vector<ResponseRecord> read_log() const {
        std::error_code ec;
        if (!std::filesystem::exists(log_path(), ec)) return {};
        std::string text = read_file(log_path().string());
        const auto last_nl = text.rfind('\n');
        text.resize(last_nl == std::string::npos ? 0 : last_nl + 1);
        return parse_records_jsonl(text, log_path().string()).records;
    }

    std::string export_responses(ExportFormat format) const {
        const auto all = read_log();
        if (all.empty()) throw Error(ErrorCode::EmptyLog, "no responses have been recorded");
        const auto latest = deduplicate_latest(all);
        const StudyConfig empty;
        const StudyConfig& cfg = config_ ? *config_ : empty;
        return format == ExportFormat::csv ? write_records_csv(latest, cfg) : write_records_jsonl(latest, cfg);
    }

private:
    void append_all(const std::string& buf) {
        std::error_code ec;
        std::filesystem::create_directories(data_dir_, ec);
        const std::string path = log_path().string();
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd < 0) throw Error(ErrorCode::StorageFailure, path + ": " + std::strerror(errno));
        const off_t start = ::lseek(fd, 0, SEEK_END);
        std::size_t done = 0;
        while (done < buf.size()) {
            const ssize_t w = ::write(fd, buf.data() + done, buf.size() - done);
            if (w < 0) {
                if (errno == EINTR) continue;
                const std::string err = std::strerror(errno);
                if (start >= 0) {
                    [[maybe_unused]] const int rc = ::ftruncate(fd, start);
                }
                ::close(fd);
                throw Error(ErrorCode::StorageFailure, path + ": " + err);
            }
            done += static_cast<std::size_t>(w);
        }
        ::fsync(fd);
        ::close(fd);
    }

    std::optional<StudyConfig> config_;
    std::filesystem::path data_dir_;
    std::mutex write_mu_;
    Timestamp last_stamp_{};
};

}  // namespace intervalrisk
