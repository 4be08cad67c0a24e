#include "beran/simnet.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace beran {

namespace {

// Control payload opcodes carried inside frame payloads.
enum class Op : uint8_t { Sync = 1, Success = 2, ConnectReq = 3, Page = 4, Handshake = 5 };

Bytes op_payload(Op op, std::span<const uint8_t> body = {}) {
    Bytes p;
    p.reserve(1 + body.size());
    p.push_back(static_cast<uint8_t>(op));
    p.insert(p.end(), body.begin(), body.end());
    return p;
}

std::optional<Op> payload_op(const Bytes& payload) {
    if (payload.empty()) return std::nullopt;
    uint8_t v = payload[0];
    if (v < 1 || v > 5) return std::nullopt;
    return static_cast<Op>(v);
}

std::span<const uint8_t> payload_body(const Bytes& payload) {
    return std::span<const uint8_t>(payload).subspan(1);
}

bool is_relay_role(NodeRole r) {
    return r == NodeRole::RU || r == NodeRole::Bridge || r == NodeRole::BcNode ||
           r == NodeRole::BeSwitch;
}

}  // namespace

const char* to_string(NodeRole r) {
    switch (r) {
        case NodeRole::UE: return "UE";
        case NodeRole::RU: return "RU";
        case NodeRole::DU: return "DU";
        case NodeRole::BcNode: return "BcNode";
        case NodeRole::BeSwitch: return "BeSwitch";
        case NodeRole::Bridge: return "Bridge";
        case NodeRole::CU: return "CU";
        case NodeRole::CN: return "CN";
    }
    return "?";
}

std::optional<NodeRole> node_role_from_name(std::string_view name) {
    static const std::pair<std::string_view, NodeRole> table[] = {
        {"UE", NodeRole::UE},         {"RU", NodeRole::RU},
        {"DU", NodeRole::DU},         {"BcNode", NodeRole::BcNode},
        {"BeSwitch", NodeRole::BeSwitch}, {"Bridge", NodeRole::Bridge},
        {"CU", NodeRole::CU},         {"CN", NodeRole::CN},
    };
    for (const auto& [n, r] : table)
        if (n == name) return r;
    return std::nullopt;
}

std::variant<SimConfig, std::string> SimConfig::parse(const std::string& text) {
    SimConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        return "config line " + std::to_string(line_no) + ": " + what;
    };

    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;

        auto kv = [](const std::string& tok, const std::string& key) -> std::optional<std::string> {
            if (tok.rfind(key + "=", 0) != 0) return std::nullopt;
            return tok.substr(key.size() + 1);
        };

        if (word == "seed") {
            if (!(ls >> cfg.seed)) return fail("seed wants a number");
        } else if (word == "node") {
            NodeDecl n;
            std::string role;
            if (!(ls >> n.node_id >> role)) return fail("node wants <id> <role>");
            auto r = node_role_from_name(role);
            if (!r) return fail("unknown role " + role);
            n.role = *r;
            cfg.nodes.push_back(std::move(n));
        } else if (word == "link") {
            LinkDecl l;
            if (!(ls >> l.link_id >> l.a >> l.b)) return fail("link wants <id> <a> <b>");
            std::string tok;
            while (ls >> tok) {
                if (auto v = kv(tok, "latency")) {
                    l.latency_ticks = std::stoull(*v);
                } else if (tok == "tamper") {
                    l.tamper_once = true;
                } else {
                    return fail("unknown link option " + tok);
                }
            }
            cfg.links.push_back(std::move(l));
        } else if (word == "identity") {
            IdentityDecl id;
            if (!(ls >> id.node_id)) return fail("identity wants <node>");
            std::string tok;
            while (ls >> tok) {
                if (auto v = kv(tok, "suite")) {
                    auto s = suite_from_name(*v);
                    if (!s) return fail("unknown suite " + *v);
                    id.suite = *s;
                } else if (auto v2 = kv(tok, "seed")) {
                    id.seed = std::stoull(*v2);
                } else {
                    return fail("unknown identity option " + tok);
                }
            }
            cfg.identities.push_back(std::move(id));
        } else if (word == "contact") {
            std::string a, b;
            if (!(ls >> a >> b)) return fail("contact wants <node> <peer>");
            cfg.contacts.emplace_back(a, b);
        } else if (word == "grant") {
            std::string node;
            int64_t amount;
            if (!(ls >> node >> amount)) return fail("grant wants <node> <amount>");
            cfg.grants.emplace_back(node, amount);
        } else if (word == "fail") {
            FailureDecl f;
            std::string tok;
            if (!(ls >> f.link_id >> tok)) return fail("fail wants <link> at=N");
            auto v = kv(tok, "at");
            if (!v) return fail("fail wants at=N");
            f.at_tick = std::stoull(*v);
            cfg.failures.push_back(std::move(f));
        } else if (word == "access_policy") {
            std::string tok;
            if (!(ls >> tok)) return fail("access_policy wants min_balance=N");
            auto v = kv(tok, "min_balance");
            if (!v) return fail("access_policy wants min_balance=N");
            cfg.access_min_balance = std::stoll(*v);
        } else if (word == "scenario") {
            ScenarioDecl s;
            if (!(ls >> s.kind)) return fail("scenario wants a kind");
            std::string tok;
            while (ls >> tok) {
                if (auto v = kv(tok, "caller")) s.caller = *v;
                else if (auto v2 = kv(tok, "callee")) s.callee = *v2;
                else if (auto v3 = kv(tok, "a")) s.caller = *v3;
                else if (auto v4 = kv(tok, "b")) s.callee = *v4;
                else return fail("unknown scenario option " + tok);
            }
            if (s.kind != "emergency" && s.kind != "d2d")
                return fail("scenario kind must be emergency or d2d");
            if (s.caller.empty() || s.callee.empty())
                return fail("scenario wants caller/callee (or a/b)");
            cfg.scenario = std::move(s);
        } else {
            return fail("unknown directive " + word);
        }
    }
    return cfg;
}

std::string TraceEvent::to_line() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%llu %s %s %s %s", static_cast<unsigned long long>(tick),
                  label.c_str(), source.c_str(), destination.c_str(), outcome.c_str());
    return buf;
}

std::string Trace::to_text() const {
    std::string out;
    for (const auto& e : events) {
        out += e.to_line();
        out += '\n';
    }
    return out;
}

std::variant<Simulation, std::string> Simulation::build(const SimConfig& config) {
    Simulation sim;
    sim.seed_ = config.seed;
    sim.scenario_ = config.scenario;
    sim.access_min_balance_ = config.access_min_balance;
    sim.failure_schedule_ = config.failures;

    for (const auto& n : config.nodes) {
        if (sim.nodes_.count(n.node_id)) return "duplicate node id " + n.node_id;
        Node node;
        node.decl = n;
        sim.nodes_.emplace(n.node_id, std::move(node));
    }
    for (const auto& l : config.links) {
        if (sim.links_.count(l.link_id)) return "duplicate link id " + l.link_id;
        if (!sim.nodes_.count(l.a)) return "link " + l.link_id + " references unknown node " + l.a;
        if (!sim.nodes_.count(l.b)) return "link " + l.link_id + " references unknown node " + l.b;
        LinkState ls;
        ls.decl = l;
        ls.tamper_pending = l.tamper_once;
        sim.links_.emplace(l.link_id, std::move(ls));
        sim.nodes_.at(l.a).attachments.push_back(l.link_id);
        sim.nodes_.at(l.b).attachments.push_back(l.link_id);
    }
    for (auto& [id, node] : sim.nodes_)
        std::sort(node.attachments.begin(), node.attachments.end());
    for (const auto& f : config.failures) {
        if (!sim.links_.count(f.link_id)) return "fail references unknown link " + f.link_id;
    }

    // Identities: every UE and DU carries one; config lines override suite/seed.
    std::map<std::string, IdentityDecl> overrides;
    for (const auto& id : config.identities) {
        if (!sim.nodes_.count(id.node_id)) return "identity references unknown node " + id.node_id;
        overrides[id.node_id] = id;
    }
    for (auto& [id, node] : sim.nodes_) {
        bool wants_identity = node.decl.role == NodeRole::UE || node.decl.role == NodeRole::DU ||
                              overrides.count(id);
        if (!wants_identity) continue;

        SuiteKind suite = SuiteKind::EllipticCurve;
        uint64_t seed_word = sim.seed_;
        if (auto it = overrides.find(id); it != overrides.end()) {
            suite = it->second.suite;
            if (it->second.seed) seed_word = *it->second.seed;
        }
        ByteWriter w;
        w.u64(seed_word);
        const char tag[] = "beran-id";
        w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(tag), sizeof(tag) - 1));
        w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(id.data()), id.size()));
        Bytes material = w.take();
        Seed256 seed = sha256(material);

        ByteWriter mw;
        const char mtag[] = "beran-mac";
        mw.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(mtag), sizeof(mtag) - 1));
        mw.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(id.data()), id.size()));
        Bytes mac_material = mw.take();
        Hash256 mac_hash = sha256(mac_material);
        node.mac[0] = 0x02;  // locally administered
        std::copy(mac_hash.begin(), mac_hash.begin() + 5, node.mac.begin() + 1);

        node.identity =
            make_identity(CryptoSuite::of(suite), PhysicalAddress::mac48(node.mac), seed);
    }

    // Shared genesis: every ledger starts from the same grant list.
    std::vector<BalanceDelta> grants;
    for (const auto& [node_id, amount] : config.grants) {
        auto it = sim.nodes_.find(node_id);
        if (it == sim.nodes_.end()) return "grant references unknown node " + node_id;
        if (!it->second.identity) return "grant for identity-less node " + node_id;
        grants.push_back({it->second.identity->bc, amount});
    }
    for (auto& [id, node] : sim.nodes_) {
        if (node.decl.role == NodeRole::UE || node.decl.role == NodeRole::DU) {
            node.ledger = std::make_unique<Ledger>(grants);
            if (node.decl.role == NodeRole::DU) {
                node.beswitch = std::make_unique<BeSwitch>(*node.ledger);
                if (sim.access_min_balance_)
                    node.beswitch->set_access_policy(*sim.access_min_balance_);
            }
        }
    }
    // Bridge ports: DU links whose far end is a Bridge node.
    for (auto& [id, node] : sim.nodes_) {
        if (node.decl.role != NodeRole::DU) continue;
        for (const auto& link_id : node.attachments) {
            const LinkState& l = sim.links_.at(link_id);
            const Node& peer = sim.nodes_.at(l.decl.a == id ? l.decl.b : l.decl.a);
            if (peer.decl.role == NodeRole::Bridge) node.beswitch->add_bridge_port(link_id);
        }
    }

    for (const auto& [owner, peer] : config.contacts) {
        auto o = sim.nodes_.find(owner);
        auto p = sim.nodes_.find(peer);
        if (o == sim.nodes_.end()) return "contact references unknown node " + owner;
        if (p == sim.nodes_.end()) return "contact references unknown node " + peer;
        if (!p->second.identity) return "contact peer has no identity: " + peer;
        o->second.contacts[peer] = p->second.identity->bc;
    }

    if (config.scenario) {
        if (!sim.nodes_.count(config.scenario->caller))
            return "scenario references unknown node " + config.scenario->caller;
        if (!sim.nodes_.count(config.scenario->callee))
            return "scenario references unknown node " + config.scenario->callee;
    }

    sim.rng_ = std::make_unique<SeededRng>(sim.seed_);
    return sim;
}

Simulation::Node* Simulation::find_node(const std::string& id) {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

Simulation::LinkState* Simulation::find_link(const std::string& id) {
    auto it = links_.find(id);
    return it == links_.end() ? nullptr : &it->second;
}

std::string Simulation::other_end(const LinkState& l, const std::string& from) const {
    return l.decl.a == from ? l.decl.b : l.decl.a;
}

void Simulation::inject_link_failure(const std::string& link_id, uint64_t at_tick) {
    if (!links_.count(link_id)) throw std::invalid_argument("unknown link " + link_id);
    failure_schedule_.push_back({link_id, at_tick});
}

void Simulation::apply_due_failures() {
    for (const auto& f : failure_schedule_) {
        if (f.at_tick <= now_) links_.at(f.link_id).up = false;
    }
}

void Simulation::trace(uint64_t tick, const std::string& label, const std::string& src,
                       const std::string& dst, const std::string& outcome) {
    trace_.events.push_back({tick, label, src, dst, outcome});
}

void Simulation::finish(bool established, const std::string& failure) {
    if (finished_) return;
    finished_ = true;
    trace_.established = established;
    trace_.failure = established ? "" : failure;
    trace(now_, "outcome", caller_, callee_, established ? "established" : failure);
}

void Simulation::send_hop(const std::string& from, const std::string& link_id,
                          std::shared_ptr<BeMacFrame> frame, const std::string& hs_label,
                          const std::string& logical_src) {
    LinkState* link = find_link(link_id);
    if (!link) return;
    if (!link->up) {
        trace(now_, "drop", from, other_end(*link, from), "dropped");
        return;
    }
    if (link->tamper_pending && !frame->payload.empty()) {
        auto tampered = std::make_shared<BeMacFrame>(*frame);
        tampered->payload.back() ^= 0x01;
        frame = tampered;
        link->tamper_pending = false;
    }
    Hop hop;
    hop.tick = now_ + link->decl.latency_ticks;
    hop.seq = next_seq_++;
    hop.link_id = link_id;
    hop.from = from;
    hop.to = other_end(*link, from);
    hop.frame = std::move(frame);
    hop.hs_label = hs_label;
    hop.logical_src = logical_src;
    queue_.push(std::move(hop));
}

bool Simulation::send_toward_ru(const std::string& ue, std::shared_ptr<BeMacFrame> frame,
                                const std::string& hs_label) {
    Node* node = find_node(ue);
    if (!node) return false;
    for (const auto& link_id : node->attachments) {
        const LinkState& l = links_.at(link_id);
        const Node& peer = nodes_.at(other_end(l, ue));
        if (peer.decl.role == NodeRole::RU) {
            send_hop(ue, link_id, std::move(frame), hs_label, ue);
            return true;
        }
    }
    return false;
}

void Simulation::run_loop() {
    constexpr uint64_t kTickCap = 100000;
    while (!queue_.empty() && !finished_) {
        Hop hop = queue_.top();
        queue_.pop();
        now_ = hop.tick;
        if (now_ > kTickCap) break;
        apply_due_failures();
        LinkState* link = find_link(hop.link_id);
        if (!link || !link->up) {
            trace(now_, "drop", hop.from, hop.to, "dropped");
            continue;
        }
        deliver(hop);
    }
    if (!finished_) {
        now_ += 64;  // the await window
        trace(now_, "timeout", caller_, callee_, "failed:Timeout");
        trace_.established = false;
        trace_.failure = "failed:Timeout";
        finished_ = true;
    }
}

void Simulation::deliver(const Hop& hop) {
    Node* node = find_node(hop.to);
    if (!node) return;
    switch (node->decl.role) {
        case NodeRole::UE: handle_ue(*node, hop); break;
        case NodeRole::DU: handle_du(*node, hop); break;
        case NodeRole::CU:
        case NodeRole::CN: break;  // inert in the DU-subnet flows
        default: handle_relay(*node, hop); break;
    }
}

void Simulation::handle_relay(Node& relay, const Hop& hop) {
    if (!is_relay_role(relay.decl.role)) return;
    const Node& from = nodes_.at(hop.from);

    if (relay.decl.role == NodeRole::RU) {
        if (hop.frame->kind == FrameKind::Registry && from.decl.role == NodeRole::UE)
            trace(now_, "msg1", hop.logical_src, relay.decl.node_id, "ok");
        if (auto op = payload_op(hop.frame->payload);
            op == Op::Success && from.decl.role == NodeRole::DU)
            trace(now_, "msg4", hop.logical_src, relay.decl.node_id, "ok");

        if (from.decl.role == NodeRole::DU || from.decl.role == NodeRole::Bridge) {
            // Downlink: fan out to every non-DU attachment.
            for (const auto& link_id : relay.attachments) {
                if (link_id == hop.link_id) continue;
                const Node& peer = nodes_.at(other_end(links_.at(link_id), relay.decl.node_id));
                if (peer.decl.role == NodeRole::DU) continue;
                send_hop(relay.decl.node_id, link_id, hop.frame, hop.hs_label, hop.logical_src);
            }
        } else {
            // Uplink toward the DU.
            for (const auto& link_id : relay.attachments) {
                const Node& peer = nodes_.at(other_end(links_.at(link_id), relay.decl.node_id));
                if (peer.decl.role == NodeRole::DU) {
                    send_hop(relay.decl.node_id, link_id, hop.frame, hop.hs_label,
                             hop.logical_src);
                    return;
                }
            }
        }
        return;
    }

    // Bridge (and standalone BcNode/BeSwitch declarations): pass through.
    for (const auto& link_id : relay.attachments) {
        if (link_id == hop.link_id) continue;
        send_hop(relay.decl.node_id, link_id, hop.frame, hop.hs_label, hop.logical_src);
        return;
    }
}

void Simulation::handle_du(Node& du, const Hop& hop) {
    const std::string bc_label = du.decl.node_id + ".bc";
    const std::string sw_label = du.decl.node_id + ".switch";
    const BeMacFrame& frame = *hop.frame;

    if (frame.kind == FrameKind::Registry) {
        trace(now_, "msg2", hop.from, bc_label, "ok");
        auto err = du.beswitch->register_from_frame(frame, hop.link_id, now_);
        if (err) {
            trace(now_, "registry", bc_label, hop.logical_src,
                  std::string("failed:") + to_string(*err));
            finish(false, std::string("failed:") + to_string(*err));
            return;
        }
        du.ledger->commit_block();
        du.beswitch->sync_with_ledger(now_);

        // Ledger update + sync toward the registering UE.
        trace(now_, "msg3", bc_label, hop.logical_src, "ok");
        BcAddress du_bc = du.identity ? du.identity->bc : frame.source_bc;
        std::string chain = du.ledger->export_text();
        auto sync = std::make_shared<BeMacFrame>();
        sync->kind = FrameKind::Control;
        sync->destination_bc = frame.source_bc;
        sync->source_bc = du_bc;
        sync->source_mac = du.mac;
        sync->payload = op_payload(
            Op::Sync, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(chain.data()),
                                               chain.size()));
        auto decision = du.beswitch->forward(*sync);
        if (auto* deliver_to = std::get_if<Deliver>(&decision))
            send_hop(du.decl.node_id, deliver_to->port, std::move(sync), "", bc_label);

        // Success notification (msg4 at the RU, msg5 at the UE).
        auto success = std::make_shared<BeMacFrame>();
        success->kind = FrameKind::Control;
        success->destination_bc = frame.source_bc;
        success->source_bc = du_bc;
        success->source_mac = du.mac;
        success->payload = op_payload(Op::Success);
        auto decision2 = du.beswitch->forward(*success);
        if (auto* deliver_to = std::get_if<Deliver>(&decision2))
            send_hop(du.decl.node_id, deliver_to->port, std::move(success), "", bc_label);
        return;
    }

    bool first_switch = frame.bridge_hops == 0;
    auto op = payload_op(frame.payload);

    if (frame.kind == FrameKind::Connect && first_switch)
        trace(now_, "msg6", hop.logical_src, sw_label, "ok");
    if (op == Op::Page && first_switch) trace(now_, "msg9", hop.logical_src, sw_label, "ok");

    ForwardDecision decision = du.beswitch->forward(frame);

    if (auto* deliver_to = std::get_if<Deliver>(&decision)) {
        if (frame.kind == FrameKind::Connect && first_switch)
            trace(now_, "msg7", sw_label, sw_label, "hit");
        std::string src = hop.logical_src;
        if (frame.kind == FrameKind::Connect || op == Op::Page) src = sw_label;
        send_hop(du.decl.node_id, deliver_to->port, hop.frame, hop.hs_label, src);
        return;
    }
    if (auto* bridge_to = std::get_if<BridgeTo>(&decision)) {
        if (frame.kind == FrameKind::Connect && first_switch)
            trace(now_, "msg7", sw_label, sw_label, "bridge");
        // Name the far-side switch for the trace.
        const LinkState& bl = links_.at(bridge_to->port);
        const Node& bridge = nodes_.at(other_end(bl, du.decl.node_id));
        std::string far = "?";
        for (const auto& link_id : bridge.attachments) {
            if (link_id == bridge_to->port) continue;
            far = other_end(links_.at(link_id), bridge.decl.node_id) + ".switch";
            break;
        }
        trace(now_, "bridge", sw_label, far, "ok");
        auto crossing = std::make_shared<BeMacFrame>(frame);
        crossing->bridge_hops = static_cast<uint8_t>(frame.bridge_hops + 1);
        std::string src = hop.logical_src;
        if (frame.kind == FrameKind::Connect || op == Op::Page) src = sw_label;
        send_hop(du.decl.node_id, bridge_to->port, std::move(crossing), hop.hs_label, src);
        return;
    }
    auto& drop = std::get<Drop>(decision);
    if (frame.kind == FrameKind::Connect && first_switch) {
        trace(now_, "msg7", sw_label, sw_label, "miss");
    } else {
        trace(now_, "drop", sw_label, hop.logical_src, "dropped");
    }
    finish(false, std::string("failed:") + to_string(drop.reason));
}

void Simulation::handle_ue(Node& ue, const Hop& hop) {
    const BeMacFrame& frame = *hop.frame;
    if (!ue.identity) return;
    if (frame.destination_bc != ue.identity->bc) return;  // not addressed here

    auto op = payload_op(frame.payload);
    switch (frame.kind) {
        case FrameKind::Registry:
            return;
        case FrameKind::Control: {
            if (op == Op::Sync) {
                std::string text(payload_body(frame.payload).begin(),
                                 payload_body(frame.payload).end());
                auto imported = Ledger::import_text(text);
                if (imported && ue.ledger) ue.ledger->sync_from(imported->chain());
                return;
            }
            if (op == Op::Success) {
                trace(now_, "msg5", hop.from, ue.decl.node_id, "ok");
                on_registered(ue.decl.node_id);
                return;
            }
            if (op == Op::Page) {
                trace(now_, "msg10", hop.logical_src, ue.decl.node_id, "ok");
                if (ue.decl.node_id == caller_ && stage_ == Stage::Connecting) {
                    stage_ = Stage::Handshaking;
                    start_handshake();
                }
                return;
            }
            return;
        }
        case FrameKind::Connect: {
            trace(now_, "msg8", hop.logical_src, ue.decl.node_id, "ok");
            if (ue.decl.node_id != callee_) return;
            // Page the source to confirm the link (msg9 at the switch,
            // msg10 at the caller).
            auto body = payload_body(frame.payload);
            if (body.size() != 34) {
                finish(false, "failed:MalformedConnect");
                return;
            }
            auto page = std::make_shared<BeMacFrame>();
            page->kind = FrameKind::Control;
            std::copy(body.begin(), body.end(), page->destination_bc.bytes.begin());
            page->source_bc = ue.identity->bc;
            page->source_mac = ue.mac;
            page->payload = op_payload(Op::Page);
            send_toward_ru(ue.decl.node_id, std::move(page), "");
            return;
        }
        case FrameKind::Data: {
            if (op == Op::Handshake)
                process_handshake_frame(ue, frame, hop.hs_label, hop.logical_src);
            return;
        }
    }
}

void Simulation::start_registration(const std::string& ue_id) {
    Node* ue = find_node(ue_id);
    if (!ue || !ue->identity) {
        finish(false, "failed:NoIdentity");
        return;
    }
    auto frame = std::make_shared<BeMacFrame>(
        make_registry_frame(ue->identity->keys, ue->mac, ++ue->reg_sequence));
    if (!send_toward_ru(ue_id, std::move(frame), "")) finish(false, "failed:NoUplink");
}

void Simulation::on_registered(const std::string& ue_id) {
    Node* ue = find_node(ue_id);
    if (ue) ue->registered = true;
    if (stage_ == Stage::CalleeRegistering && ue_id == callee_) {
        stage_ = Stage::CallerRegistering;
        start_registration(caller_);
    } else if (stage_ == Stage::CallerRegistering && ue_id == caller_) {
        stage_ = Stage::Connecting;
        send_connect_request();
    }
}

void Simulation::send_connect_request() {
    Node* caller = find_node(caller_);
    if (!caller || !caller->identity) {
        finish(false, "failed:NoIdentity");
        return;
    }
    auto contact = caller->contacts.find(callee_);
    if (contact == caller->contacts.end()) {
        finish(false, "failed:NoContact");
        return;
    }
    auto frame = std::make_shared<BeMacFrame>();
    frame->kind = FrameKind::Connect;
    frame->destination_bc = contact->second;
    frame->source_bc = caller->identity->bc;
    frame->source_mac = caller->mac;
    frame->payload = op_payload(Op::ConnectReq, caller->identity->bc.bytes);
    if (!send_toward_ru(caller_, std::move(frame), "")) finish(false, "failed:NoUplink");
}

void Simulation::start_handshake() {
    Node* caller = find_node(caller_);
    if (!caller || !caller->identity) return;
    auto contact = caller->contacts.find(callee_);
    if (contact == caller->contacts.end()) {
        finish(false, "failed:NoContact");
        return;
    }
    auto [state, request] = initiate(*caller->identity, contact->second, *rng_);
    caller->hs = std::move(state);

    auto frame = std::make_shared<BeMacFrame>();
    frame->kind = FrameKind::Data;
    frame->destination_bc = contact->second;
    frame->source_bc = caller->identity->bc;
    frame->source_mac = caller->mac;
    Bytes wire = encode(request, CodecMode::Concrete);
    frame->payload = op_payload(Op::Handshake, wire);

    // Direct link first (D2D), else via the RU.
    Node* callee = find_node(callee_);
    for (const auto& link_id : caller->attachments) {
        if (callee && other_end(links_.at(link_id), caller_) == callee_) {
            send_hop(caller_, link_id, std::move(frame), "hs1", caller_);
            return;
        }
    }
    if (!send_toward_ru(caller_, std::move(frame), "hs1")) finish(false, "failed:NoUplink");
}

void Simulation::process_handshake_frame(Node& ue, const BeMacFrame& frame,
                                         const std::string& hs_label,
                                         const std::string& logical_src) {
    trace(now_, hs_label.empty() ? "hs?" : hs_label, logical_src, ue.decl.node_id, "ok");
    auto body = payload_body(frame.payload);
    auto fail = [&](const std::string& reason) { finish(false, "failed:" + reason); };

    auto reply = [&](const Bytes& wire, const std::string& label, const BcAddress& dest) {
        auto out = std::make_shared<BeMacFrame>();
        out->kind = FrameKind::Data;
        out->destination_bc = dest;
        out->source_bc = ue.identity->bc;
        out->source_mac = ue.mac;
        out->payload = op_payload(Op::Handshake, wire);
        const std::string& peer = ue.decl.node_id == caller_ ? callee_ : caller_;
        for (const auto& link_id : ue.attachments) {
            if (other_end(links_.at(link_id), ue.decl.node_id) == peer) {
                send_hop(ue.decl.node_id, link_id, std::move(out), label, ue.decl.node_id);
                return true;
            }
        }
        return send_toward_ru(ue.decl.node_id, std::move(out), label);
    };

    if (ue.decl.node_id == callee_ && !ue.hs) {
        auto decoded = decode_request(body);
        if (!decoded) {
            fail("MalformedMessage");
            return;
        }
        // Zero trust: the claimed sender must be a pre-trusted contact.
        std::optional<BcAddress> expected;
        for (const auto& [name, bc] : ue.contacts) {
            if (bc == derive_bc_address(decoded->first.sender_public_key)) expected = bc;
        }
        if (!expected) {
            // Fall back to the claimed address so the protocol check itself
            // reports the mismatch.
            expected = ue.contacts.empty() ? derive_bc_address(decoded->first.sender_public_key)
                                           : ue.contacts.begin()->second;
        }
        auto result = respond(*ue.identity, *expected, decoded->first, ue.nonces, *rng_);
        if (!is_ok(result)) {
            fail(to_string(error_of(result)));
            return;
        }
        auto& ok = std::get<RespondOk>(result);
        ue.hs = std::move(ok.state);
        if (!reply(encode(ok.response, CodecMode::Concrete), "hs2", ue.hs->trusted_peer))
            fail("NoUplink");
        return;
    }

    if (ue.hs && ue.hs->phase == Phase::AwaitingResponse) {
        auto decoded = decode_response(body);
        if (!decoded) {
            fail("MalformedMessage");
            return;
        }
        auto result = confirm(*ue.hs, decoded->first, ue.nonces, *rng_);
        if (!is_ok(result)) {
            fail(to_string(error_of(result)));
            return;
        }
        auto& ok = std::get<ConfirmOk>(result);
        if (!reply(encode(ok.message, CodecMode::Concrete), "hs3", ue.hs->trusted_peer)) {
            fail("NoUplink");
            return;
        }
        return;
    }

    if (ue.hs && ue.hs->phase == Phase::AwaitingConfirm) {
        auto decoded = decode_confirm(body);
        if (!decoded) {
            fail("MalformedMessage");
            return;
        }
        auto result = finalize(*ue.hs, decoded->first);
        if (!is_ok(result)) {
            fail(to_string(error_of(result)));
            return;
        }
        Node* caller = find_node(caller_);
        Node* callee = find_node(callee_);
        if (caller && callee && caller->hs && callee->hs &&
            caller->hs->phase == Phase::Established && callee->hs->phase == Phase::Established) {
            bool equal = caller->hs->session_key && callee->hs->session_key &&
                         caller->hs->session_key->bits == callee->hs->session_key->bits;
            if (equal) {
                finish(true, "");
            } else {
                finish(false, "failed:KeyMismatch");
            }
        }
        return;
    }
}

Trace Simulation::run_emergency_scenario(const std::string& caller, const std::string& callee) {
    trace_ = Trace{};
    finished_ = false;
    now_ = 0;
    next_seq_ = 0;
    caller_ = caller;
    callee_ = callee;
    rng_ = std::make_unique<SeededRng>(seed_);

    Node* a = find_node(caller);
    Node* b = find_node(callee);
    if (!a || !b || a->decl.role != NodeRole::UE || b->decl.role != NodeRole::UE) {
        finish(false, "failed:BadEndpoints");
        return trace_;
    }
    apply_due_failures();
    stage_ = Stage::CalleeRegistering;
    start_registration(callee);
    run_loop();
    return trace_;
}

Trace Simulation::run_d2d_handshake(const std::string& a, const std::string& b) {
    trace_ = Trace{};
    finished_ = false;
    now_ = 0;
    next_seq_ = 0;
    caller_ = a;
    callee_ = b;
    rng_ = std::make_unique<SeededRng>(seed_);

    Node* na = find_node(a);
    Node* nb = find_node(b);
    if (!na || !nb || !na->identity || !nb->identity) {
        finish(false, "failed:BadEndpoints");
        return trace_;
    }
    bool direct = false;
    for (const auto& link_id : na->attachments)
        if (other_end(links_.at(link_id), a) == b) direct = true;
    if (!direct) {
        finish(false, "failed:NoDirectLink");
        return trace_;
    }
    apply_due_failures();
    stage_ = Stage::Handshaking;
    start_handshake();
    run_loop();
    return trace_;
}

Trace Simulation::run_configured_scenario() {
    if (!scenario_) {
        Trace t;
        t.established = false;
        t.failure = "failed:NoScenario";
        return t;
    }
    if (scenario_->kind == "d2d") return run_d2d_handshake(scenario_->caller, scenario_->callee);
    return run_emergency_scenario(scenario_->caller, scenario_->callee);
}

const Identity* Simulation::identity_of(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end() || !it->second.identity) return nullptr;
    return &*it->second.identity;
}

const Ledger* Simulation::ledger_of(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) return nullptr;
    return it->second.ledger.get();
}

std::optional<SessionKey> Simulation::session_key_of(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end() || !it->second.hs) return std::nullopt;
    return it->second.hs->session_key;
}

bool Simulation::link_up(const std::string& link_id) const {
    auto it = links_.find(link_id);
    return it != links_.end() && it->second.up;
}

}  // namespace beran
