#include "bss/digest.hpp"

#include <openssl/sha.h>

namespace bss {

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * SHA256_DIGEST_LENGTH);
    for (unsigned char c : md) {
        out += kHex[c >> 4];
        out += kHex[c & 0xf];
    }
    return out;
}

}  // namespace bss
