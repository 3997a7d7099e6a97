#pragma once
// JSON form of a BrickworkCircuit so failing instances can be replayed.
//
//   {"n": 8, "q": 2, "depth": 2,
//    "gates": [{"left_site": 0, "layer": 0, "matrix": "<base64>"}, ...]}
//
// "matrix" is the q^2 x q^2 gate in row-major order, each entry stored as
// two little-endian float64 values (re, im), base64 encoded with padding.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <boost/beast/core/detail/base64.hpp>
#include <nlohmann/json.hpp>

#include "tilre/circuits.hpp"

namespace tilre {

namespace detail {

inline void to_little_endian(unsigned char* bytes) {
    if constexpr (std::endian::native == std::endian::big)
        for (int i = 0; i < 4; ++i) std::swap(bytes[i], bytes[7 - i]);
}

}  // namespace detail

inline std::string encode_matrix(const Matrix& m) {
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(m.size()) * 16);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (double part : {m(i, j).real(), m(i, j).imag()}) {
                unsigned char b[8];
                std::memcpy(b, &part, 8);
                detail::to_little_endian(b);
                raw.insert(raw.end(), b, b + 8);
            }
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(raw.size()), '\0');
    out.resize(b64::encode(out.data(), raw.data(), raw.size()));
    return out;
}

inline Matrix decode_matrix(const std::string& text, Eigen::Index rows, Eigen::Index cols) {
    namespace b64 = boost::beast::detail::base64;
    const std::size_t expected = static_cast<std::size_t>(rows * cols) * 16;
    std::vector<unsigned char> raw(b64::decoded_size(text.size()) + 1);
    const auto [written, read] = b64::decode(raw.data(), text.data(), text.size());
    const std::size_t body = text.find_last_not_of('=') + 1;  // decode stops at padding
    if (written != expected || read != body)
        throw DomainError("decode_matrix: expected " + std::to_string(expected) + " bytes, decoded " +
                          std::to_string(written));
    Matrix m(rows, cols);
    std::size_t off = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double parts[2];
            for (double& p : parts) {
                unsigned char b[8];
                std::memcpy(b, raw.data() + off, 8);
                detail::to_little_endian(b);
                std::memcpy(&p, b, 8);
                off += 8;
            }
            m(i, j) = {parts[0], parts[1]};
        }
    return m;
}

inline nlohmann::ordered_json circuit_to_json(const BrickworkCircuit& c) {
    nlohmann::ordered_json j;
    j["n"] = c.spec().n;
    j["q"] = c.spec().q;
    j["depth"] = c.depth();
    j["gates"] = nlohmann::ordered_json::array();
    for (const auto& g : c.gates()) {
        nlohmann::ordered_json gj;
        gj["left_site"] = g.left_site;
        gj["layer"] = g.layer;
        gj["matrix"] = encode_matrix(g.matrix);
        j["gates"].push_back(std::move(gj));
    }
    return j;
}

/// Rebuilds the circuit; the constructor re-validates unitarity and layout.
template <class Json>
BrickworkCircuit circuit_from_json(const Json& j) {
    try {
        const RingSpec spec(j.at("n").template get<int>(), j.at("q").template get<int>());
        const int local = spec.q * spec.q;
        std::vector<TwoSiteGate> gates;
        for (const auto& gj : j.at("gates"))
            gates.push_back({gj.at("left_site").template get<int>(), gj.at("layer").template get<int>(),
                             decode_matrix(gj.at("matrix").template get<std::string>(), local, local)});
        return {spec, j.at("depth").template get<int>(), std::move(gates)};
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("circuit_from_json: ") + e.what());
    }
}

}  // namespace tilre
