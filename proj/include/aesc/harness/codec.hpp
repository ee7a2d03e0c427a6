#pragma once

// External image codec run as a subprocess. Contract:
//   <command> encode <quality> <width> <height> <channels>   raw bytes on stdin -> compressed bytes on stdout
//   <command> decode <width> <height> <channels>             compressed bytes on stdin -> raw bytes on stdout
// Raw bytes are 8-bit, row-major, channel-interleaved (H x W x C). A nonzero
// exit status or a raw output of the wrong size is a codec failure.

#include <cerrno>
#include <csignal>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "aesc/bytes.hpp"
#include "aesc/data.hpp"
#include "aesc/harness/config.hpp"
#include "aesc/tensor.hpp"

namespace aesc::harness {

struct ProcessResult {
    int status = -1; // exit code, or -1 if the process did not exit normally
    Bytes out;
};

// Runs argv[0] (PATH lookup) with `input` on stdin; captures stdout.
inline ProcessResult run_process(const std::vector<std::string>& argv, std::span<const std::uint8_t> input) {
    if (argv.empty()) throw UsageError("empty codec command");
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw Error("pipe failed");
    const pid_t pid = fork();
    if (pid < 0) throw Error("fork failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        const int devnull = open("/dev/null", O_WRONLY);
        if (devnull >= 0) dup2(devnull, STDERR_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    // Non-blocking writes: a blocking write of a large input could stall while
    // the child waits for us to drain its output.
    fcntl(in_pipe[1], F_SETFL, fcntl(in_pipe[1], F_GETFL) | O_NONBLOCK);
    std::signal(SIGPIPE, SIG_IGN);
    ProcessResult res;
    std::size_t written = 0;
    bool in_open = true;
    if (input.empty()) {
        close(in_pipe[1]);
        in_open = false;
    }
    std::uint8_t buf[65536];
    while (true) {
        pollfd fds[2];
        nfds_t n = 0;
        fds[n++] = {out_pipe[0], POLLIN, 0};
        if (in_open) fds[n++] = {in_pipe[1], POLLOUT, 0};
        if (poll(fds, n, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (in_open && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const ssize_t w = write(in_pipe[1], input.data() + written, input.size() - written);
            if (w > 0) written += static_cast<std::size_t>(w);
            const bool retry = w < 0 && (errno == EAGAIN || errno == EINTR);
            if ((w < 0 && !retry) || written == input.size()) {
                close(in_pipe[1]);
                in_open = false;
            }
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            const ssize_t r = read(out_pipe[0], buf, sizeof buf);
            if (r > 0) {
                res.out.insert(res.out.end(), buf, buf + r);
            } else if (r == 0 || errno != EINTR) {
                break;
            }
        }
    }
    if (in_open) close(in_pipe[1]);
    close(out_pipe[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    res.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

inline Bytes image_to_raw(const Tensor& img) {
    const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    Bytes raw;
    raw.reserve(c * h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) raw.push_back(data::denormalize_pixel(img.at(ch, y, x)));
    return raw;
}

inline Tensor raw_to_image(std::span<const std::uint8_t> raw, const Shape& shape) {
    Tensor img(shape);
    const std::size_t c = shape[0], h = shape[1], w = shape[2];
    std::size_t i = 0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) img.at(ch, y, x) = data::normalize_pixel(raw[i++]);
    return img;
}

class ExternalCodec {
public:
    explicit ExternalCodec(std::string command) : argv_(split_command(command)) {}

    // True when the command runs and survives an encode/decode round trip.
    bool available() const {
        const Tensor probe({1, 16, 16});
        const auto enc = encode(probe, 75);
        return enc && decode(*enc, probe.shape()).has_value();
    }

    std::optional<Bytes> encode(const Tensor& img, int quality) const {
        auto argv = argv_;
        for (auto s : {std::string("encode"), std::to_string(quality), std::to_string(img.dim(2)), std::to_string(img.dim(1)),
                       std::to_string(img.dim(0))})
            argv.push_back(s);
        try {
            auto r = run_process(argv, image_to_raw(img));
            if (r.status != 0 || r.out.empty()) return std::nullopt;
            return std::move(r.out);
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    std::optional<Tensor> decode(std::span<const std::uint8_t> compressed, const Shape& shape) const {
        auto argv = argv_;
        for (auto s : {std::string("decode"), std::to_string(shape[2]), std::to_string(shape[1]), std::to_string(shape[0])})
            argv.push_back(s);
        try {
            const auto r = run_process(argv, compressed);
            if (r.status != 0 || r.out.size() != shape_size(shape)) return std::nullopt;
            return raw_to_image(r.out, shape);
        } catch (const Error&) {
            return std::nullopt;
        }
    }

private:
    static std::vector<std::string> split_command(const std::string& cmd) {
        std::vector<std::string> out;
        std::istringstream in(cmd);
        for (std::string tok; in >> tok;) out.push_back(tok);
        if (out.empty()) throw UsageError("empty codec command");
        return out;
    }

    std::vector<std::string> argv_;
};

} // namespace aesc::harness
