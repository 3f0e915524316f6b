#pragma once

// Adapter for a segmenter living in another process. The child reads one
// request per line on stdin and answers one line on stdout:
//
//   PREDICT <image_path> <x0> <y0> <x1> <y1> <out_path>   ->  OK <out_path>
//   PREDICT_ALL <image_path> <out_dir>                    ->  OK <count>
//   (any failure)                                         ->  ERR <message>
//
// Rasters travel as PMAP files; PREDICT_ALL leaves <out_dir>/cand_<k>.pmap.

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "samu/image_io.hpp"
#include "samu/segmenter.hpp"

namespace samu {

inline std::string format_predict_request(const std::string& image_path, const BoxPrompt& box,
                                          const std::string& out_path) {
    return "PREDICT " + image_path + " " + std::to_string(box.x0) + " " + std::to_string(box.y0) + " " +
           std::to_string(box.x1) + " " + std::to_string(box.y1) + " " + out_path + "\n";
}

inline std::string format_predict_all_request(const std::string& image_path, const std::string& out_dir) {
    return "PREDICT_ALL " + image_path + " " + out_dir + "\n";
}

/// Payload of an `OK <payload>` line. `ERR <msg>` throws BackendError(msg);
/// anything else is a ProtocolViolation.
inline std::string parse_response(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.starts_with("OK ") && line.size() > 3) return std::string(line.substr(3));
    if (line == "ERR") throw BackendError("");
    if (line.starts_with("ERR ")) throw BackendError(std::string(line.substr(4)));
    throw ProtocolViolation("unexpected backend response: '" + std::string(line) + "'");
}

struct ExternalBackendConfig {
    std::string command;                 ///< run through /bin/sh -c
    std::filesystem::path work_dir;      ///< scratch space for request/response files
    std::string label = "external";
};

/// One spawned backend process. Requests are strictly sequential; use one
/// instance per worker thread.
class ExternalBackend final : public SegmenterBackend {
public:
    explicit ExternalBackend(ExternalBackendConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.command.empty()) throw InvalidArgument("external backend command is empty");
        std::error_code ec;
        std::filesystem::create_directories(cfg_.work_dir, ec);
        if (ec) throw IoFailure("cannot create backend work dir " + cfg_.work_dir.string());
        spawn();
    }

    ExternalBackend(const ExternalBackend&) = delete;
    ExternalBackend& operator=(const ExternalBackend&) = delete;

    ~ExternalBackend() override { shutdown(); }

    /// The protocol-level call: the image is already on disk.
    ProbabilityMap predict_path(const std::filesystem::path& image_path, const BoxPrompt& box,
                                int width, int height) {
        const auto out = next_path("pred", ".pmap");
        const std::string payload = roundtrip(format_predict_request(image_path.string(), box, out.string()));
        return load_checked(payload, width, height);
    }

    std::vector<ProbabilityMap> predict_all_path(const std::filesystem::path& image_path, int width,
                                                 int height) {
        const auto dir = next_path("cands", "");
        std::filesystem::create_directories(dir);
        const std::string payload = roundtrip(format_predict_all_request(image_path.string(), dir.string()));
        long count = 0;
        try {
            std::size_t used = 0;
            count = std::stol(payload, &used);
            if (used != payload.size()) throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
            throw ProtocolViolation("PREDICT_ALL answered with a non-integer count: '" + payload + "'");
        }
        if (count < 1) throw ProtocolViolation("PREDICT_ALL returned no candidates");
        std::vector<ProbabilityMap> out;
        for (long k = 0; k < count; ++k)
            out.push_back(load_checked((dir / ("cand_" + std::to_string(k) + ".pmap")).string(), width, height));
        return out;
    }

    ProbabilityMap predict(const Image& image, const BoxPrompt& box) override {
        return predict_path(materialize(image), box, image.width(), image.height());
    }

    std::vector<ProbabilityMap> predict_everything(const Image& image) override {
        return predict_all_path(materialize(image), image.width(), image.height());
    }

    std::string label() const override { return cfg_.label; }

private:
    void spawn() {
        // A dead child must surface as BackendUnavailable, not kill us.
        std::signal(SIGPIPE, SIG_IGN);
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0) throw BackendUnavailable("pipe() failed");
        if (pipe(from_child) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            throw BackendUnavailable("pipe() failed");
        }
        pid_ = fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
            throw BackendUnavailable("fork() failed");
        }
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
            execl("/bin/sh", "sh", "-c", cfg_.command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
        fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
        out_ = fdopen(to_child[1], "w");
        in_ = fdopen(from_child[0], "r");
        if (!out_ || !in_) throw BackendUnavailable("fdopen() failed");
    }

    void shutdown() noexcept {
        if (out_) std::fclose(out_);
        if (in_) std::fclose(in_);
        out_ = in_ = nullptr;
        if (pid_ > 0) {
            int status = 0;
            waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

    std::string roundtrip(const std::string& request) {
        if (!out_ || !in_) throw BackendUnavailable("backend process is not running");
        if (std::fputs(request.c_str(), out_) < 0 || std::fflush(out_) != 0)
            throw BackendUnavailable("backend closed its input (command: " + cfg_.command + ")");
        std::string line;
        for (int c; (c = std::fgetc(in_)) != EOF;) {
            line.push_back(static_cast<char>(c));
            if (c == '\n') break;
        }
        if (line.empty()) throw BackendUnavailable("backend exited without answering (command: " + cfg_.command + ")");
        if (line.back() != '\n') throw ProtocolViolation("backend response is not newline-terminated");
        return parse_response(line);
    }

    ProbabilityMap load_checked(const std::string& path, int width, int height) {
        Raster r = load_raster_f32(path);
        if (r.width() != width || r.height() != height)
            throw DimensionMismatch("backend map is " + std::to_string(r.width()) + "x" +
                                    std::to_string(r.height()) + ", image is " + std::to_string(width) +
                                    "x" + std::to_string(height));
        try {
            return ProbabilityMap(std::move(r));
        } catch (const InvalidArgument& e) {
            throw ProtocolViolation(std::string("backend map is not a probability map: ") + e.what());
        }
    }

    std::filesystem::path next_path(const char* stem, const char* ext) {
        return cfg_.work_dir / (std::string(stem) + "_" + std::to_string(counter_++) + ext);
    }

    // Writes the image once per distinct content and reuses the file.
    std::filesystem::path materialize(const Image& image) {
        std::uint64_t h = hash_string("image");
        h = derive_seed(h, static_cast<std::uint64_t>(image.width()), static_cast<std::uint64_t>(image.height()),
                        static_cast<std::uint64_t>(image.channels()));
        for (float v : image.values()) h = derive_seed(h, quantize_u8(v));
        if (h == cached_hash_ && !cached_path_.empty()) return cached_path_;
        cached_path_ = next_path("input", ".png");
        save_image(image, cached_path_);
        cached_hash_ = h;
        return cached_path_;
    }

    ExternalBackendConfig cfg_;
    pid_t pid_ = -1;
    std::FILE* out_ = nullptr;
    std::FILE* in_ = nullptr;
    std::uint64_t counter_ = 0;
    std::uint64_t cached_hash_ = 0;
    std::filesystem::path cached_path_;
};

} // namespace samu
