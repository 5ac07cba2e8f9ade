#ifndef OOD_SERIALIZE_HPP
#define OOD_SERIALIZE_HPP

#include <string>
#include <vector>

namespace ood {

// Flat little-endian float64 weight file. 16-byte header: 4-byte magic "OODW",
// u32 version, u64 value count; values follow.
void save_weights_binary(const std::vector<double>& values, const std::string& path);
std::vector<double> load_weights_binary(const std::string& path);

// One value per line, for eyeballing.
void save_weights_csv(const std::vector<double>& values, const std::string& path);
std::vector<double> load_weights_csv(const std::string& path);

} // namespace ood

#endif
