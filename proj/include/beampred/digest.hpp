// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace beampred
{

using Sha1 = std::array<std::uint8_t, 20>;

inline Sha1 sha1(std::string_view bytes)
{
    Sha1 out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha1(), nullptr) != 1 || len != out.size())
        throw std::runtime_error("sha1 digest failed");
    return out;
}

inline std::string to_hex(const Sha1 &d)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(d.size() * 2);
    for (auto b : d)
    {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

// Same identifier `git hash-object` prints for a blob with these contents.
inline std::string git_blob_digest(std::string_view content)
{
    std::string blob = "blob " + std::to_string(content.size());
    blob.push_back('\0');
    blob.append(content);
    return to_hex(sha1(blob));
}

} // namespace beampred
