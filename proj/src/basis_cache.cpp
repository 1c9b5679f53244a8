#include "msfem/basis_cache.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace msfem {

namespace {

constexpr std::uint32_t kMagic = 0x4d534243;  // "MSBC"
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const unsigned char* p;
    const unsigned char* end;
    bool ok = true;

    std::uint32_t u32() {
        if (end - p < 4) { ok = false; return 0; }
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint64_t u64() {
        if (end - p < 8) { ok = false; return 0; }
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d = 0.0;
        std::memcpy(&d, &bits, 8);
        return d;
    }
};

void put_array(std::string& out, const std::vector<double>& v) {
    put_u64(out, v.size());
    for (double d : v) put_f64(out, d);
}

std::vector<double> get_array(Reader& r) {
    const std::uint64_t n = r.u64();
    if (!r.ok || n > static_cast<std::uint64_t>(r.end - r.p) / 8) {
        r.ok = false;
        return {};
    }
    std::vector<double> v(n);
    for (std::uint64_t i = 0; i < n; ++i) v[i] = r.f64();
    return v;
}

// payload serialization of one LocalBasis
std::string encode_basis(const LocalBasis& b) {
    std::string s;
    put_u32(s, static_cast<std::uint32_t>(b.element));
    std::uint32_t flags = 0;
    if (b.has_bubble) flags |= 1;
    if (b.fully_perforated) flags |= 2;
    if (b.os_fallback) flags |= 4;
    for (int k = 0; k < 3; ++k)
        if (b.edge_active[k]) flags |= 8u << k;
    put_u32(s, flags);
    put_f64(s, b.h);
    put_f64(s, b.solver_residual);
    for (const auto& row : b.edge_multipliers)
        for (double d : row) put_f64(s, d);
    for (double d : b.bubble_multipliers) put_f64(s, d);
    for (const auto& f : b.edge_fields) put_array(s, f);
    for (const auto& f : b.vertex_fields) put_array(s, f);
    put_array(s, b.bubble_field);
    return s;
}

bool decode_basis(Reader& r, LocalBasis& b) {
    b.element = static_cast<int>(r.u32());
    const std::uint32_t flags = r.u32();
    b.has_bubble = flags & 1;
    b.fully_perforated = flags & 2;
    b.os_fallback = flags & 4;
    for (int k = 0; k < 3; ++k) b.edge_active[k] = (flags >> (3 + k)) & 1;
    b.h = r.f64();
    b.solver_residual = r.f64();
    for (auto& row : b.edge_multipliers)
        for (double& d : row) d = r.f64();
    for (double& d : b.bubble_multipliers) d = r.f64();
    for (auto& f : b.edge_fields) f = get_array(r);
    for (auto& f : b.vertex_fields) f = get_array(r);
    b.bubble_field = get_array(r);
    return r.ok && r.p == r.end;
}

std::string wrap_record(const std::string& key, const std::string& payload) {
    std::string rec;
    put_u32(rec, kMagic);
    put_u32(rec, kVersion);
    put_u64(rec, fnv1a64(key.data(), key.size()));
    put_u64(rec, payload.size());
    rec += payload;
    put_u64(rec, fnv1a64(payload.data(), payload.size()));
    return rec;
}

// Validates header + checksum; returns the payload span or nullopt.
std::optional<std::pair<const unsigned char*, std::size_t>> unwrap_record(
    const std::string& raw, const std::string& key) {
    Reader r{reinterpret_cast<const unsigned char*>(raw.data()),
             reinterpret_cast<const unsigned char*>(raw.data()) + raw.size()};
    if (r.u32() != kMagic || r.u32() != kVersion) return std::nullopt;
    if (r.u64() != fnv1a64(key.data(), key.size())) return std::nullopt;
    const std::uint64_t n = r.u64();
    if (!r.ok || static_cast<std::uint64_t>(r.end - r.p) != n + 8) return std::nullopt;
    const unsigned char* payload = r.p;
    r.p += n;
    if (r.u64() != fnv1a64(payload, n)) return std::nullopt;
    return std::make_pair(payload, static_cast<std::size_t>(n));
}

void atomic_write(const std::filesystem::path& target, const std::string& bytes) {
    namespace fs = std::filesystem;
    fs::create_directories(target.parent_path());
    // unique temp name per writer; rename is atomic within the directory
    static std::atomic<std::uint64_t> counter{0};
    const auto tmp = target.parent_path() /
                     (target.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
                      std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("cache: write failed at " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        // another writer may have won the race; that is fine
    }
}

std::optional<std::string> read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void quarantine(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::rename(p, p.string() + ".corrupt", ec);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string basis_cache_key(const DomainSpec& spec, const BasisConfig& cfg, int coarse_n,
                            int element, int m, double alpha, const std::string& b_descriptor) {
    std::ostringstream key;
    key.precision(17);
    key << "v1|eps=" << spec.epsilon << "|pat=" << static_cast<int>(spec.pattern.kind);
    key << "|motif=";
    for (const Rect& r : spec.pattern.motif.rectangles)
        key << r.xmin << ',' << r.ymin << ',' << r.xmax << ',' << r.ymax << ';';
    if (spec.pattern.kind == PatternKind::RandomThinned)
        key << "|seed=" << spec.pattern.seed << "|keep=" << spec.pattern.keep_probability;
    key << "|bc=" << (spec.perforation_bc == PerforationBC::Dirichlet ? "D" : "N")
        << "|op=" << static_cast<int>(cfg.op) << "|fam=" << static_cast<int>(cfg.bc_family)
        << "|os=" << cfg.oversampling_ratio << "|flux=" << static_cast<int>(cfg.flux_form)
        << "|bub=" << static_cast<int>(cfg.bubbles) << "|N=" << coarse_n << "|K=" << element
        << "|m=" << m << "|alpha=" << alpha << "|" << b_descriptor;
    return key.str();
}

BasisCache::BasisCache(std::filesystem::path root) : root_(std::move(root)) {}

BasisCache BasisCache::from_env() {
    if (const char* env = std::getenv("MSFEM_CACHE_ROOT"); env && *env)
        return BasisCache(std::filesystem::path(env));
    return BasisCache(std::filesystem::path(".msfem-cache"));
}

std::filesystem::path BasisCache::path_for(const std::string& key, const char* ext) const {
    const std::uint64_t h = fnv1a64(key.data(), key.size());
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx", static_cast<unsigned long long>(h));
    return root_ / (std::string(name) + ext);
}

void BasisCache::store(const std::string& key, const LocalBasis& basis) const {
    atomic_write(path_for(key, ".basis"), wrap_record(key, encode_basis(basis)));
}

std::optional<LocalBasis> BasisCache::load(const std::string& key) const {
    const auto path = path_for(key, ".basis");
    const auto raw = read_all(path);
    if (!raw) {
        ++misses_;
        return std::nullopt;
    }
    if (const auto payload = unwrap_record(*raw, key)) {
        Reader r{payload->first, payload->first + payload->second};
        LocalBasis b;
        if (decode_basis(r, b)) {
            ++hits_;
            return b;
        }
    }
    quarantine(path);
    ++misses_;
    return std::nullopt;
}

void BasisCache::store_field(const std::string& key, const std::vector<double>& field) const {
    std::string payload;
    put_array(payload, field);
    atomic_write(path_for(key, ".field"), wrap_record(key, payload));
}

std::optional<std::vector<double>> BasisCache::load_field(const std::string& key) const {
    const auto path = path_for(key, ".field");
    const auto raw = read_all(path);
    if (!raw) {
        ++misses_;
        return std::nullopt;
    }
    if (const auto payload = unwrap_record(*raw, key)) {
        Reader r{payload->first, payload->first + payload->second};
        std::vector<double> v = get_array(r);
        if (r.ok && r.p == r.end) {
            ++hits_;
            return v;
        }
    }
    quarantine(path);
    ++misses_;
    return std::nullopt;
}

}  // namespace msfem
