#include "mesh/frames.hpp"

#include <algorithm>
#include <string>

#include "mesh/errors.hpp"

namespace mesh {

namespace {

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 24));
        out_.push_back(static_cast<std::uint8_t>(v >> 16));
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void bytes(const std::vector<std::uint8_t>& v) {
        out_.insert(out_.end(), v.begin(), v.end());
    }
    void id_list(const std::vector<NodeId>& ids, const char* what) {
        if (ids.size() > 255)
            throw EncodeError(std::string(what) + " list exceeds 255 entries");
        u8(static_cast<std::uint8_t>(ids.size()));
        for (NodeId id : ids)
            u16(id);
    }

private:
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& in) : in_(in) {}

    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] << 8 | in_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(in_[pos_]) << 24 |
                          static_cast<std::uint32_t>(in_[pos_ + 1]) << 16 |
                          static_cast<std::uint32_t>(in_[pos_ + 2]) << 8 |
                          static_cast<std::uint32_t>(in_[pos_ + 3]);
        pos_ += 4;
        return v;
    }
    std::vector<std::uint8_t> bytes(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> v(in_.begin() + pos_, in_.begin() + pos_ + n);
        pos_ += n;
        return v;
    }
    std::vector<NodeId> id_list() {
        std::size_t n = u8();
        std::vector<NodeId> ids(n);
        for (auto& id : ids)
            id = u16();
        return ids;
    }
    bool at_end() const { return pos_ == in_.size(); }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > in_.size())
            throw DecodeError("truncated frame: need " +
                              std::to_string(pos_ + n - in_.size()) + " more byte(s)");
    }

    const std::vector<std::uint8_t>& in_;
    std::size_t pos_ = 0;
};

void encode_descriptor(ByteWriter& w, const NativePacketDescriptor& d) {
    w.u32(d.packet_id);
    w.u16(d.src);
    w.u16(d.dst);
    w.u32(d.created_at_ms);
    w.u16(d.payload_len);
    w.id_list(d.sp_route, "SP");
    w.id_list(d.forwarding_set, "FN");
    w.id_list(d.traversed, "T");
    w.id_list(d.overheard, "O");
}

NativePacketDescriptor decode_descriptor(ByteReader& r) {
    NativePacketDescriptor d;
    d.packet_id = r.u32();
    d.src = r.u16();
    d.dst = r.u16();
    d.created_at_ms = r.u32();
    d.payload_len = r.u16();
    d.sp_route = r.id_list();
    d.forwarding_set = r.id_list();
    d.traversed = r.id_list();
    d.overheard = r.id_list();
    return d;
}

std::size_t data_payload_len(const DataFrame& f) {
    std::size_t len = 0;
    for (const auto& c : f.components)
        len = std::max(len, static_cast<std::size_t>(c.payload_len));
    return len;
}

} // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);

    if (const auto* f = std::get_if<DataFrame>(&frame)) {
        if (f->components.empty())
            throw EncodeError("DATA frame needs at least one component");
        if (f->components.size() > 255)
            throw EncodeError("NC exceeds 255");
        if (f->recipients.empty())
            throw EncodeError("DATA frame needs at least one recipient");
        if (f->xor_payload.size() != data_payload_len(*f))
            throw EncodeError("xor_payload length does not match longest component");
        w.u8(static_cast<std::uint8_t>(FrameType::kData));
        w.u8(static_cast<std::uint8_t>(f->components.size()));
        w.id_list(f->recipients, "recipient");
        for (const auto& c : f->components)
            encode_descriptor(w, c);
        w.bytes(f->xor_payload);
    } else if (const auto* a = std::get_if<AnnounceFrame>(&frame)) {
        if (a->packet_ids.empty())
            throw EncodeError("ANNOUNCE needs at least one packet id");
        if (a->packet_ids.size() > 255)
            throw EncodeError("ANNOUNCE id list exceeds 255 entries");
        w.u8(static_cast<std::uint8_t>(FrameType::kAnnounce));
        w.u16(a->sender);
        w.u8(static_cast<std::uint8_t>(a->packet_ids.size()));
        for (auto id : a->packet_ids)
            w.u32(id);
    } else if (const auto* k = std::get_if<AckFrame>(&frame)) {
        w.u8(static_cast<std::uint8_t>(FrameType::kAck));
        w.u32(k->packet_id);
        w.u16(k->dst_reached);
        w.u16(k->src);
    } else {
        const auto& p = std::get<ProbeFrame>(frame);
        w.u8(static_cast<std::uint8_t>(FrameType::kEtxProbe));
        w.u16(p.sender);
        w.u32(p.seq);
    }
    return out;
}

Frame decode_frame(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    auto type = r.u8();
    switch (type) {
    case static_cast<std::uint8_t>(FrameType::kData): {
        DataFrame f;
        std::size_t nc = r.u8();
        f.recipients = r.id_list();
        // NC=0 and NC=1 both mean a native packet on the wire; 0 is accepted
        // here but never emitted by encode_frame.
        std::size_t n_components = std::max<std::size_t>(nc, 1);
        f.components.reserve(n_components);
        for (std::size_t i = 0; i < n_components; ++i)
            f.components.push_back(decode_descriptor(r));
        std::size_t want = data_payload_len(f);
        if (r.remaining() != want)
            throw DecodeError("payload length mismatch: header implies " +
                              std::to_string(want) + " byte(s), got " +
                              std::to_string(r.remaining()));
        f.xor_payload = r.bytes(want);
        return f;
    }
    case static_cast<std::uint8_t>(FrameType::kAnnounce): {
        AnnounceFrame a;
        a.sender = r.u16();
        std::size_t n = r.u8();
        a.packet_ids.resize(n);
        for (auto& id : a.packet_ids)
            id = r.u32();
        if (!r.at_end())
            throw DecodeError("trailing bytes after ANNOUNCE");
        return a;
    }
    case static_cast<std::uint8_t>(FrameType::kAck): {
        AckFrame k;
        k.packet_id = r.u32();
        k.dst_reached = r.u16();
        k.src = r.u16();
        if (!r.at_end())
            throw DecodeError("trailing bytes after ACK");
        return k;
    }
    case static_cast<std::uint8_t>(FrameType::kEtxProbe): {
        ProbeFrame p;
        p.sender = r.u16();
        p.seq = r.u32();
        if (!r.at_end())
            throw DecodeError("trailing bytes after ETX_PROBE");
        return p;
    }
    default:
        throw DecodeError("unknown frame type " + std::to_string(type));
    }
}

std::size_t encoded_size(const Frame& frame) {
    return encode_frame(frame).size();
}

double frame_airtime(const Frame& frame, double bitrate_bps, std::size_t extra_bytes) {
    if (bitrate_bps <= 0.0)
        throw std::invalid_argument("bitrate must be > 0");
    std::size_t total = encoded_size(frame) + kMacOverheadBytes + extra_bytes;
    return static_cast<double>(total) * 8.0 / bitrate_bps;
}

} // namespace mesh
