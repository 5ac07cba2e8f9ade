#include "ood/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ood/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; byte swapping is not implemented");

namespace ood {

namespace {
constexpr char kMagic[4] = {'O', 'O', 'D', 'W'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void save_weights_binary(const std::vector<double>& values, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open weight file for writing: " + path);
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), 4);
    const std::uint64_t count = values.size();
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw DataError("short write to weight file: " + path);
}

std::vector<double> load_weights_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open weight file: " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t count = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&count), 8);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path + ": bad weight file magic");
    if (version != kVersion)
        throw DataError(path + ": unsupported weight file version " +
                        std::to_string(version));
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw DataError(path + ": truncated weight data");
    return values;
}

void save_weights_csv(const std::vector<double>& values, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open weight CSV for writing: " + path);
    out.precision(17);
    out << "value\n";
    for (double v : values) out << v << '\n';
}

std::vector<double> load_weights_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open weight CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing header row");
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            values.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": cannot parse value '" + line + "'");
        }
    }
    return values;
}

} // namespace ood
