#pragma once

#include <string>
#include <string_view>

namespace archint {

std::string sha256_hex(std::string_view data);
std::string md5_hex(std::string_view data);

/// Streaming SHA-256 for digests assembled from many parts.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::string_view data);
    std::string hex();

private:
    void* ctx_;
};

}  // namespace archint
