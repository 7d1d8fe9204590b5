#include "hiertrack/io.hpp"

#include "hiertrack/text.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hiertrack {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 8> kEmbeddingMagic{'H', 'T', 'R', 'K', 'E', 'M', 'B', '\0'};
constexpr std::uint32_t kEmbeddingVersion = 1;

std::ofstream open_out(const fs::path& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Yields the data lines of a CSV after checking its header.
std::vector<std::vector<std::string>> csv_rows(const fs::path& path, std::string_view header, std::size_t columns) {
    const std::string content = read_file(path);
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(content);
    std::string line;
    bool seen_header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        if (!seen_header) {
            if (text::trim(line) != header) {
                throw Error(ErrorKind::InvalidInput, path.string() + ": expected header '" + std::string(header) + "'");
            }
            seen_header = true;
            continue;
        }
        auto fields = text::split(line, ',');
        if (fields.size() != columns) {
            throw Error(ErrorKind::InvalidInput, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                                     std::to_string(columns) + " columns");
        }
        rows.push_back(std::move(fields));
    }
    if (!seen_header) throw Error(ErrorKind::InvalidInput, path.string() + ": missing header");
    return rows;
}

std::string box_fields(const Box& b) {
    return text::format_double(b.x) + ',' + text::format_double(b.y) + ',' + text::format_double(b.w) + ',' +
           text::format_double(b.h);
}

Box parse_box(const std::vector<std::string>& f, const std::string& where) {
    Box b{text::parse_double(f[2], where + " x"), text::parse_double(f[3], where + " y"),
          text::parse_double(f[4], where + " w"), text::parse_double(f[5], where + " h")};
    if (!b.valid()) throw Error(ErrorKind::InvalidInput, where + ": box size must be positive");
    return b;
}

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& data, std::size_t& pos, const fs::path& path) {
    if (pos + sizeof(T) > data.size()) throw Error(ErrorKind::InvalidInput, path.string() + ": truncated file");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    }
    pos += sizeof(T);
    return value;
}

}  // namespace

void write_detections_csv(const fs::path& path, std::span<const Detection> detections) {
    auto out = open_out(path);
    out << "frame,id,x,y,w,h,conf,class\n";
    for (const auto& d : detections) {
        out << d.frame << ',' << d.gt_identity.value_or(-1) << ',' << box_fields(d.box) << ','
            << text::format_double(d.confidence) << ',' << d.class_id << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<Detection> read_detections_csv(const fs::path& path) {
    const auto rows = csv_rows(path, "frame,id,x,y,w,h,conf,class", 8);
    std::vector<Detection> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& f = rows[i];
        const std::string where = path.filename().string() + " row " + std::to_string(i + 1);
        Detection d;
        d.frame = text::parse_int(f[0], where + " frame");
        if (d.frame < 0) throw Error(ErrorKind::InvalidInput, where + ": negative frame");
        const int id = text::parse_int(f[1], where + " id");
        if (id >= 0) d.gt_identity = id;
        else if (id != -1) throw Error(ErrorKind::InvalidInput, where + ": id must be >= 0 or -1");
        d.box = parse_box(f, where);
        d.confidence = text::parse_double(f[6], where + " conf");
        d.class_id = text::parse_int(f[7], where + " class");
        d.embedding_id = i;
        out.push_back(d);
    }
    return out;
}

void write_embeddings(const fs::path& path, const EmbeddingTable& table) {
    std::string data(kEmbeddingMagic.begin(), kEmbeddingMagic.end());
    put_le<std::uint32_t>(data, kEmbeddingVersion);
    put_le<std::uint64_t>(data, table.rows());
    put_le<std::uint32_t>(data, static_cast<std::uint32_t>(table.dim()));
    for (float v : table.values()) put_le<std::uint32_t>(data, std::bit_cast<std::uint32_t>(v));
    auto out = open_out(path, true);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

EmbeddingTable read_embeddings(const fs::path& path) {
    const std::string data = read_file(path);
    if (data.size() < kEmbeddingMagic.size() ||
        std::memcmp(data.data(), kEmbeddingMagic.data(), kEmbeddingMagic.size()) != 0) {
        throw Error(ErrorKind::InvalidInput, path.string() + ": not an embedding file");
    }
    std::size_t pos = kEmbeddingMagic.size();
    const auto version = get_le<std::uint32_t>(data, pos, path);
    if (version != kEmbeddingVersion) {
        throw Error(ErrorKind::InvalidInput, path.string() + ": unsupported version " + std::to_string(version));
    }
    const auto rows = get_le<std::uint64_t>(data, pos, path);
    const auto dim = get_le<std::uint32_t>(data, pos, path);
    if (dim == 0) throw Error(ErrorKind::InvalidInput, path.string() + ": zero dimension");
    if ((data.size() - pos) / 4 / dim != rows || (data.size() - pos) != rows * dim * 4) {
        throw Error(ErrorKind::InvalidInput, path.string() + ": size does not match header");
    }
    std::vector<float> values(rows * dim);
    for (auto& v : values) v = std::bit_cast<float>(get_le<std::uint32_t>(data, pos, path));
    return EmbeddingTable(dim, std::move(values));
}

void write_tracks_csv(const fs::path& path, std::span<const TrackRow> rows) {
    auto out = open_out(path);
    out << "frame,identity,x,y,w,h,confidence,class,interpolated_flag\n";
    std::vector<TrackRow> sorted(rows.begin(), rows.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const TrackRow& a, const TrackRow& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.identity < b.identity;
    });
    for (const auto& r : sorted) {
        out << r.frame << ',' << r.identity << ',' << box_fields(r.box) << ',' << text::format_double(r.confidence)
            << ',' << r.class_id << ',' << (r.interpolated ? 1 : 0) << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<TrackRow> read_tracks_csv(const fs::path& path) {
    const auto rows = csv_rows(path, "frame,identity,x,y,w,h,confidence,class,interpolated_flag", 9);
    std::vector<TrackRow> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& f = rows[i];
        const std::string where = path.filename().string() + " row " + std::to_string(i + 1);
        TrackRow r;
        r.frame = text::parse_int(f[0], where + " frame");
        r.identity = text::parse_int(f[1], where + " identity");
        r.box = parse_box(f, where);
        r.confidence = text::parse_double(f[6], where + " confidence");
        r.class_id = text::parse_int(f[7], where + " class");
        r.interpolated = text::parse_bool(f[8], where + " interpolated_flag");
        out.push_back(r);
    }
    return out;
}

int Sequence::frame_end() const {
    int end = 0;
    for (const auto& d : detections) end = std::max(end, d.frame + 1);
    return end;
}

void write_scenario(const fs::path& dir, const Scenario& scenario) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    write_detections_csv(dir / kDetectionsFile, scenario.detections);
    write_embeddings(dir / kEmbeddingsFile, scenario.embeddings);
    write_tracks_csv(dir / kGroundTruthFile, gt_rows(scenario.detections));
}

Sequence load_sequence(const fs::path& dir) {
    Sequence s;
    s.name = dir.filename().string();
    if (s.name.empty()) s.name = dir.parent_path().filename().string();
    const fs::path det_path = dir / kDetectionsFile;
    const fs::path emb_path = dir / kEmbeddingsFile;
    if (!fs::exists(det_path)) throw Error(ErrorKind::Io, "missing detections file " + det_path.string());
    if (!fs::exists(emb_path)) throw Error(ErrorKind::Io, "missing embeddings file " + emb_path.string());
    s.detections = read_detections_csv(det_path);
    const EmbeddingTable raw = read_embeddings(emb_path);
    if (raw.rows() != s.detections.size()) {
        throw Error(ErrorKind::InvalidInput, emb_path.string() + ": " + std::to_string(raw.rows()) +
                                                 " rows but " + std::to_string(s.detections.size()) + " detections");
    }
    s.embeddings = raw.normalized();
    return s;
}

std::vector<Sequence> load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
    if (fs::exists(dir / kDetectionsFile)) return {load_sequence(dir)};
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / kDetectionsFile)) subdirs.push_back(entry.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) throw Error(ErrorKind::Io, "no sequences found in " + dir.string());
    std::vector<Sequence> out;
    for (const auto& p : subdirs) out.push_back(load_sequence(p));
    return out;
}

}  // namespace hiertrack
