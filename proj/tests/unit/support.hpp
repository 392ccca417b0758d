#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "bss/domain.hpp"
#include "bss/error.hpp"

namespace bss::test {

inline StationMap line_stations(int n, int capacity = 10) {
    std::vector<Station> list;
    for (int i = 0; i < n; ++i) list.push_back({"s" + std::to_string(i), {500.0 * i, 0.0}, capacity});
    return StationMap(list);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("bss_unit_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Kind of the Error thrown by `f`, or nullopt when it returns normally.
inline std::optional<ErrorKind> kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

}  // namespace bss::test
