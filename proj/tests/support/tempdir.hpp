#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

// Self-deleting scratch directory.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("aesc-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    void write(const std::string& name, const std::vector<unsigned char>& bytes) const {
        std::ofstream f(path_ / name, std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }

private:
    std::filesystem::path path_;
};

inline void put_be32(std::vector<unsigned char>& b, unsigned v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
}

// Minimal MNIST-format files with n images whose pixels encode (index + row).
inline void write_fake_mnist(const TempDir& dir, const std::string& prefix, unsigned n, unsigned seed = 1) {
    std::mt19937 rng(seed);
    std::vector<unsigned char> img, lab;
    put_be32(img, 0x803);
    put_be32(img, n);
    put_be32(img, 28);
    put_be32(img, 28);
    put_be32(lab, 0x801);
    put_be32(lab, n);
    for (unsigned i = 0; i < n; ++i) {
        for (int p = 0; p < 784; ++p) img.push_back(static_cast<unsigned char>(rng() & 0xFF));
        lab.push_back(static_cast<unsigned char>(i % 10));
    }
    dir.write(prefix + "-images-idx3-ubyte", img);
    dir.write(prefix + "-labels-idx1-ubyte", lab);
}

inline void write_fake_cifar(const TempDir& dir, unsigned per_batch, unsigned seed = 1) {
    std::mt19937 rng(seed);
    auto batch = [&](const std::string& name) {
        std::vector<unsigned char> b;
        for (unsigned i = 0; i < per_batch; ++i) {
            b.push_back(static_cast<unsigned char>(i % 10));
            for (int p = 0; p < 3072; ++p) b.push_back(static_cast<unsigned char>(rng() & 0xFF));
        }
        dir.write(name, b);
    };
    for (int i = 1; i <= 5; ++i) batch("data_batch_" + std::to_string(i) + ".bin");
    batch("test_batch.bin");
}
