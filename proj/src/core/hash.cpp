#include "mgd/core/hash.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <stdexcept>

namespace mgd {

struct Sha256::Impl {
    EVP_MD_CTX* ctx = nullptr;
    bool finished = false;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>())
{
    impl_->ctx = EVP_MD_CTX_new();
    if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(impl_->ctx);
        throw std::runtime_error("sha256 initialization failed");
    }
}

Sha256::~Sha256()
{
    EVP_MD_CTX_free(impl_->ctx);
}

Sha256& Sha256::update(const void* data, std::size_t size)
{
    if (impl_->finished) throw std::logic_error("sha256 updated after hex()");
    if (EVP_DigestUpdate(impl_->ctx, data, size) != 1) throw std::runtime_error("sha256 update failed");
    return *this;
}

std::string Sha256::hex()
{
    if (impl_->finished) throw std::logic_error("sha256 finished twice");
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(impl_->ctx, digest, &len) != 1) throw std::runtime_error("sha256 finalization failed");
    impl_->finished = true;
    std::string out(2 * len, '0');
    for (unsigned int i = 0; i < len; ++i) std::snprintf(&out[2 * i], 3, "%02x", digest[i]);
    return out;
}

std::string sha256_hex(std::string_view text)
{
    return Sha256().update(text).hex();
}

} // namespace mgd
