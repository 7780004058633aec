#include "kvh/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace kvh {

namespace {

constexpr char magic[4] = {'K', 'V', 'H', 'B'};
constexpr std::uint32_t flag_mixed = 1, flag_two_thirds = 2;

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        const auto b = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(b >> (8 * i)));
    }
    void c128(cplx v) {
        f64(v.real());
        f64(v.imag());
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos++]) << (8 * i);
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos++]) << (8 * i);
        return std::bit_cast<double>(v);
    }
    cplx c128() {
        const double re = f64();
        return {re, f64()};
    }
    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw SnapshotError("truncated payload");
    }
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;
};

struct Header {
    std::uint32_t nq = 0, np = 0, n = 1;
    PayloadKind kind = PayloadKind::Liouville;
    double q_min = 0, q_max = 0, p_min = 0, p_max = 0;
    double hbar = 1, t = 0, d_floor = 0, eps = 0;
    std::uint32_t flags = 0;
};

void write_header(Writer& w, const Header& h) {
    for (char c : magic) w.out.push_back(static_cast<std::uint8_t>(c));
    w.u32(snapshot_version);
    w.u32(h.nq);
    w.u32(h.np);
    w.u32(h.n);
    w.u32(static_cast<std::uint32_t>(h.kind));
    for (double x : {h.q_min, h.q_max, h.p_min, h.p_max, h.hbar, h.t, h.d_floor, h.eps}) w.f64(x);
    w.u32(h.flags);
    w.out.resize(snapshot_header_size, 0);
}

Header grid_header(const Grid& g, PayloadKind kind, int n, double hbar, double t) {
    Header h;
    h.nq = g.nq();
    h.np = g.np();
    h.n = n;
    h.kind = kind;
    h.q_min = g.q_min();
    h.q_max = g.q_max();
    h.p_min = g.p_min();
    h.p_max = g.p_max();
    h.hbar = hbar;
    h.t = t;
    return h;
}

void put(Writer& w, const ScalarField& f) {
    for (double x : f.values()) w.f64(x);
}
void put(Writer& w, const std::vector<cplx>& v) {
    for (cplx x : v) w.c128(x);
}

ScalarField get_real(Reader& r, const Grid& g) {
    ScalarField f(g);
    for (auto& x : f.values()) x = r.f64();
    return f;
}
void get_complex(Reader& r, std::vector<cplx>& v) {
    for (auto& x : v) x = r.c128();
}

} // namespace

std::vector<std::uint8_t> encode_snapshot(const State& s, double t) {
    Writer w;
    std::visit(
        [&](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, LiouvilleState>) {
                write_header(w, grid_header(st.rho.grid(), PayloadKind::Liouville, 1, 1.0, t));
                put(w, st.rho);
            } else if constexpr (std::is_same_v<T, KoopmanWavefunction>) {
                write_header(w, grid_header(st.psi.grid(), PayloadKind::Koopman, 1, st.hbar, t));
                put(w, st.psi.values());
            } else if constexpr (std::is_same_v<T, HybridWavefunction>) {
                write_header(w, grid_header(st.ups.grid(), PayloadKind::Wave, st.ups.n(), st.hbar, t));
                put(w, st.ups.raw());
            } else if constexpr (std::is_same_v<T, ClosureState>) {
                Header h = grid_header(st.grid(), PayloadKind::Closure, st.n(), st.hbar, t);
                h.d_floor = st.d_floor;
                h.eps = st.eps;
                h.flags = (st.mixed ? flag_mixed : 0) | (st.dealias == Dealias::TwoThirds ? flag_two_thirds : 0);
                write_header(w, h);
                put(w, st.P.raw());
            } else if constexpr (std::is_same_v<T, MeanFieldState>) {
                write_header(w, grid_header(st.D.grid(), PayloadKind::MeanField, int(st.rho.rows()), st.hbar, t));
                put(w, st.D);
                for (int a = 0; a < st.rho.rows(); ++a)
                    for (int b = 0; b < st.rho.cols(); ++b) w.c128(st.rho(a, b));
            } else {
                Header h = grid_header(st.grid(), PayloadKind::Spin, 2, st.hbar, t);
                h.d_floor = st.d_floor;
                h.eps = st.eps;
                h.flags = st.dealias == Dealias::TwoThirds ? flag_two_thirds : 0;
                write_header(w, h);
                put(w, st.D);
                for (const auto& c : st.s) put(w, c);
            }
        },
        s);
    return std::move(w.out);
}

Snapshot decode_snapshot(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < snapshot_header_size) throw SnapshotError("file shorter than the header");
    if (std::memcmp(bytes.data(), magic, 4) != 0) throw SnapshotError("bad magic");
    Reader r(bytes);
    r.pos = 4;
    if (const auto v = r.u32(); v != snapshot_version) throw SnapshotError("unsupported version " + std::to_string(v));
    Header h;
    h.nq = r.u32();
    h.np = r.u32();
    h.n = r.u32();
    const std::uint32_t kind = r.u32();
    h.q_min = r.f64();
    h.q_max = r.f64();
    h.p_min = r.f64();
    h.p_max = r.f64();
    h.hbar = r.f64();
    h.t = r.f64();
    h.d_floor = r.f64();
    h.eps = r.f64();
    h.flags = r.u32();
    for (std::size_t i = r.pos; i < snapshot_header_size; ++i)
        if (bytes[i] != 0) throw SnapshotError("nonzero header padding");
    r.pos = snapshot_header_size;
    if (kind < 1 || kind > 6) throw SnapshotError("unknown payload kind " + std::to_string(kind));
    if (h.n < 1 || h.n > 64) throw SnapshotError("implausible number of levels");

    const Grid g(int(h.nq), int(h.np), h.q_min, h.q_max, h.p_min, h.p_max);
    const std::size_t npts = g.size(), n = h.n;
    std::size_t doubles = 0;
    switch (static_cast<PayloadKind>(kind)) {
    case PayloadKind::Liouville: doubles = npts; break;
    case PayloadKind::Koopman: doubles = 2 * npts; break;
    case PayloadKind::Wave: doubles = 2 * n * npts; break;
    case PayloadKind::Closure: doubles = 2 * n * n * npts; break;
    case PayloadKind::MeanField: doubles = npts + 2 * n * n; break;
    case PayloadKind::Spin: doubles = 4 * npts; break;
    }
    if (bytes.size() != snapshot_header_size + 8 * doubles) throw SnapshotError("payload length does not match the header");

    const Dealias dealias = h.flags & flag_two_thirds ? Dealias::TwoThirds : Dealias::None;
    Snapshot out{LiouvilleState{ScalarField(g)}, h.t};
    switch (static_cast<PayloadKind>(kind)) {
    case PayloadKind::Liouville: out.state = LiouvilleState{get_real(r, g)}; break;
    case PayloadKind::Koopman: {
        ComplexField psi(g);
        get_complex(r, psi.values());
        out.state = KoopmanWavefunction{std::move(psi), h.hbar};
        break;
    }
    case PayloadKind::Wave: {
        AmplitudeField ups(g, int(n));
        get_complex(r, ups.raw());
        out.state = HybridWavefunction{std::move(ups), h.hbar};
        break;
    }
    case PayloadKind::Closure: {
        MatrixField P(g, int(n));
        get_complex(r, P.raw());
        ClosureState s(std::move(P), h.hbar, h.d_floor);
        s.eps = h.eps;
        s.mixed = h.flags & flag_mixed;
        s.dealias = dealias;
        out.state = std::move(s);
        break;
    }
    case PayloadKind::MeanField: {
        ScalarField D = get_real(r, g);
        CMatrix rho(n, n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) rho(a, b) = r.c128();
        out.state = MeanFieldState{std::move(D), std::move(rho), h.hbar};
        break;
    }
    case PayloadKind::Spin: {
        ScalarField D = get_real(r, g);
        Vec3Field s{get_real(r, g), get_real(r, g), get_real(r, g)};
        SpinState st(std::move(D), std::move(s), h.hbar, h.d_floor);
        st.eps = h.eps;
        st.dealias = dealias;
        out.state = std::move(st);
        break;
    }
    }
    return out;
}

void write_snapshot(const std::filesystem::path& path, const State& s, double t) {
    const auto bytes = encode_snapshot(s, t);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw SnapshotError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw SnapshotError("write failed for " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SnapshotError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_snapshot(bytes);
}

} // namespace kvh
