#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msfem/basis.hpp"
#include "msfem/geometry.hpp"

namespace msfem {

/// FNV-1a over a byte string; used for cache keys and record checksums.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);

/// Canonical key text for a per-element basis record. Everything the basis
/// depends on goes in: domain, config, coarse mesh size, element id, fine
/// resolution, alpha and the advection descriptor (caller-provided text,
/// e.g. "b=1,1" or "b=eps:1,1").
std::string basis_cache_key(const DomainSpec& spec, const BasisConfig& cfg, int coarse_n,
                            int element, int m, double alpha, const std::string& b_descriptor);

/// Disk cache of basis / field records. Writes are atomic (temp file +
/// rename), so concurrent writers of one key leave exactly one intact
/// record. Corrupt records are quarantined and reported as misses.
class BasisCache {
  public:
    explicit BasisCache(std::filesystem::path root);

    /// Root from the MSFEM_CACHE_ROOT environment variable, falling back
    /// to .msfem-cache under the current directory.
    static BasisCache from_env();

    const std::filesystem::path& root() const { return root_; }

    void store(const std::string& key, const LocalBasis& basis) const;
    std::optional<LocalBasis> load(const std::string& key) const;

    /// Plain field records (used for reference solutions).
    void store_field(const std::string& key, const std::vector<double>& field) const;
    std::optional<std::vector<double>> load_field(const std::string& key) const;

    std::uint64_t hits() const { return hits_.load(); }
    std::uint64_t misses() const { return misses_.load(); }

  private:
    std::filesystem::path path_for(const std::string& key, const char* ext) const;
    std::filesystem::path root_;
    mutable std::atomic<std::uint64_t> hits_{0};
    mutable std::atomic<std::uint64_t> misses_{0};
};

}  // namespace msfem
