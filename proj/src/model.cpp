#include "aft/model.hpp"

#include <algorithm>

namespace aft::model {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enum conversions

std::string to_string(ObjType t) {
    switch (t) {
        case ObjType::button: return "button";
        case ObjType::textfield: return "textfield";
        case ObjType::password_field: return "password_field";
        case ObjType::listbox: return "listbox";
        case ObjType::combobox: return "combobox";
        case ObjType::checkbox: return "checkbox";
        case ObjType::link: return "link";
        case ObjType::label: return "label";
    }
    return "button";
}

ObjType obj_type_from_string(const std::string& s) {
    if (s == "button") return ObjType::button;
    if (s == "textfield") return ObjType::textfield;
    if (s == "password_field") return ObjType::password_field;
    if (s == "listbox") return ObjType::listbox;
    if (s == "combobox") return ObjType::combobox;
    if (s == "checkbox") return ObjType::checkbox;
    if (s == "link") return ObjType::link;
    if (s == "label") return ObjType::label;
    throw ParseError("unknown object type: \"" + s + "\"");
}

bool is_input_type(ObjType t) {
    switch (t) {
        case ObjType::textfield:
        case ObjType::password_field:
        case ObjType::listbox:
        case ObjType::combobox:
        case ObjType::checkbox:
            return true;
        default:
            return false;
    }
}

bool is_select_type(ObjType t) {
    return t == ObjType::listbox || t == ObjType::combobox;
}

std::string to_string(ActionVerb v) {
    switch (v) {
        case ActionVerb::open: return "open";
        case ActionVerb::click: return "click";
        case ActionVerb::enter: return "enter";
        case ActionVerb::select: return "select";
        case ActionVerb::check: return "check";
        case ActionVerb::refresh: return "refresh";
        case ActionVerb::wait: return "wait";
        case ActionVerb::popup_click: return "popup_click";
    }
    return "click";
}

ActionVerb action_verb_from_string(const std::string& s) {
    if (s == "open") return ActionVerb::open;
    if (s == "click") return ActionVerb::click;
    if (s == "enter") return ActionVerb::enter;
    if (s == "select") return ActionVerb::select;
    if (s == "check") return ActionVerb::check;
    if (s == "refresh") return ActionVerb::refresh;
    if (s == "wait") return ActionVerb::wait;
    if (s == "popup_click") return ActionVerb::popup_click;
    throw ParseError("unknown action verb: \"" + s + "\"");
}

std::string to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::ok: return "ok";
        case OutcomeKind::no_such_object: return "no_such_object";
        case OutcomeKind::no_such_screen: return "no_such_screen";
        case OutcomeKind::blocked_by_popup: return "blocked_by_popup";
        case OutcomeKind::guard_unsatisfied: return "guard_unsatisfied";
        case OutcomeKind::load_failure: return "load_failure";
        case OutcomeKind::invalid_action: return "invalid_action";
    }
    return "ok";
}

std::string to_string(MutationKind k) {
    switch (k) {
        case MutationKind::rename_object: return "rename_object";
        case MutationKind::retype_object: return "retype_object";
        case MutationKind::reparent_object: return "reparent_object";
        case MutationKind::move_object: return "move_object";
        case MutationKind::delete_object: return "delete_object";
        case MutationKind::add_object: return "add_object";
        case MutationKind::add_select_option: return "add_select_option";
        case MutationKind::add_popup: return "add_popup";
        case MutationKind::set_load_failure: return "set_load_failure";
    }
    return "rename_object";
}

MutationKind mutation_kind_from_string(const std::string& s) {
    if (s == "rename_object") return MutationKind::rename_object;
    if (s == "retype_object") return MutationKind::retype_object;
    if (s == "reparent_object") return MutationKind::reparent_object;
    if (s == "move_object") return MutationKind::move_object;
    if (s == "delete_object") return MutationKind::delete_object;
    if (s == "add_object") return MutationKind::add_object;
    if (s == "add_select_option") return MutationKind::add_select_option;
    if (s == "add_popup") return MutationKind::add_popup;
    if (s == "set_load_failure") return MutationKind::set_load_failure;
    throw ParseError("unknown mutation kind: \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// Lookup helpers

const UIObject* Screen::find_object(const std::string& object_id) const {
    for (const auto& o : objects) {
        if (o.id == object_id) {
            return &o;
        }
    }
    return nullptr;
}

const Screen* AppModel::find_screen(const std::string& screen_id) const {
    for (const auto& s : screens) {
        if (s.id == screen_id) {
            return &s;
        }
    }
    return nullptr;
}

std::pair<const Screen*, const UIObject*> AppModel::find_object(const std::string& object_id) const {
    for (const auto& s : screens) {
        if (const UIObject* o = s.find_object(object_id)) {
            return {&s, o};
        }
    }
    return {nullptr, nullptr};
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace {

[[noreturn]] void fail_parse(const std::string& ctx, const std::string& what) {
    throw ParseError(ctx + ": " + what);
}

const json& require_key(const json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) {
        fail_parse(ctx, std::string("missing required key \"") + key + "\"");
    }
    return *it;
}

std::string require_string(const json& j, const char* key, const std::string& ctx) {
    const json& v = require_key(j, key, ctx);
    if (!v.is_string()) {
        fail_parse(ctx, std::string("key \"") + key + "\" must be a string");
    }
    return v.get<std::string>();
}

std::string optional_string(const json& j, const char* key, const std::string& fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return fallback;
    }
    return it->get<std::string>();
}

bool optional_bool(const json& j, const char* key, bool fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return fallback;
    }
    return it->get<bool>();
}

std::array<int, 2> require_pair(const json& j, const char* key, const std::string& ctx) {
    const json& v = require_key(j, key, ctx);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
        fail_parse(ctx, std::string("key \"") + key + "\" must be a pair of integers");
    }
    return {v[0].get<int>(), v[1].get<int>()};
}

UIObject object_from_json(const json& j, const std::string& ctx) {
    if (!j.is_object()) {
        fail_parse(ctx, "object record must be a JSON object");
    }
    UIObject o;
    o.id = require_string(j, "id", ctx);
    const std::string octx = ctx + ", object \"" + o.id + "\"";
    o.name = require_string(j, "name", octx);
    o.obj_type = obj_type_from_string(require_string(j, "obj_type", octx));
    if (j.contains("parent_id") && !j["parent_id"].is_null()) {
        o.parent_id = j["parent_id"].get<std::string>();
    }
    o.text = optional_string(j, "text", "");
    o.position = require_pair(j, "position", octx);
    o.size = require_pair(j, "size", octx);
    o.required = optional_bool(j, "required", false);
    if (j.contains("options")) {
        for (const auto& opt : j["options"]) {
            o.options.push_back(opt.get<std::string>());
        }
    }
    o.enabled = optional_bool(j, "enabled", true);
    o.visible = optional_bool(j, "visible", true);
    return o;
}

json object_to_json(const UIObject& o) {
    json j;
    j["id"] = o.id;
    j["name"] = o.name;
    j["obj_type"] = to_string(o.obj_type);
    j["parent_id"] = o.parent_id ? json(*o.parent_id) : json(nullptr);
    j["text"] = o.text;
    j["position"] = o.position;
    j["size"] = o.size;
    j["required"] = o.required;
    j["options"] = o.options;
    j["enabled"] = o.enabled;
    j["visible"] = o.visible;
    return j;
}

PopupSpec popup_from_json(const json& j, const std::string& ctx) {
    PopupSpec p;
    p.id = require_string(j, "id", ctx);
    const std::string pctx = ctx + ", popup \"" + p.id + "\"";
    p.title = optional_string(j, "title", "");
    p.body_text = optional_string(j, "body_text", "");
    for (const auto& b : require_key(j, "buttons", pctx)) {
        PopupButton btn;
        btn.text = require_string(b, "text", pctx);
        const std::string eff = optional_string(b, "effect", "dismiss");
        if (eff == "dismiss") {
            btn.effect = ButtonEffect::dismiss;
        } else if (eff == "abort") {
            btn.effect = ButtonEffect::abort;
        } else {
            fail_parse(pctx, "button effect must be \"dismiss\" or \"abort\"");
        }
        p.buttons.push_back(btn);
    }
    const json& trig = require_key(j, "trigger", pctx);
    p.trigger.screen = require_string(trig, "screen", pctx);
    p.trigger.fire_on_nth_action = require_key(trig, "fire_on_nth_action", pctx).get<int>();
    p.trigger.one_shot = optional_bool(trig, "one_shot", true);
    return p;
}

json popup_to_json(const PopupSpec& p) {
    json j;
    j["id"] = p.id;
    j["title"] = p.title;
    j["body_text"] = p.body_text;
    json buttons = json::array();
    for (const auto& b : p.buttons) {
        buttons.push_back({{"text", b.text},
                           {"effect", b.effect == ButtonEffect::dismiss ? "dismiss" : "abort"}});
    }
    j["buttons"] = buttons;
    j["trigger"] = {{"screen", p.trigger.screen},
                    {"fire_on_nth_action", p.trigger.fire_on_nth_action},
                    {"one_shot", p.trigger.one_shot}};
    return j;
}

} // namespace

AppModel load_model(const std::string& document) {
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError("model: top-level value must be an object");
    }

    AppModel m;
    m.version = optional_string(j, "version", "v1");
    m.start_screen = require_string(j, "start_screen", "model");

    for (const auto& js : require_key(j, "screens", "model")) {
        Screen s;
        s.id = require_string(js, "id", "model screens");
        const std::string sctx = "screen \"" + s.id + "\"";
        s.title = optional_string(js, "title", s.id);
        s.dimensions = require_pair(js, "dimensions", sctx);
        s.is_loading_stub = optional_bool(js, "is_loading_stub", false);
        s.requires_login = optional_bool(js, "requires_login", false);
        if (js.contains("objects")) {
            for (const auto& jo : js["objects"]) {
                s.objects.push_back(object_from_json(jo, sctx));
            }
        }
        if (js.contains("transitions")) {
            for (const auto& jt : js["transitions"]) {
                Transition t;
                const json& trig = require_key(jt, "trigger", sctx);
                t.trigger_object = require_string(trig, "object", sctx);
                t.trigger_action = action_verb_from_string(optional_string(trig, "action", "click"));
                t.target = require_string(jt, "target", sctx);
                if (jt.contains("guards")) {
                    for (const auto& g : jt["guards"]) {
                        t.guards.push_back(g.get<std::string>());
                    }
                }
                s.transitions.push_back(std::move(t));
            }
        }
        m.screens.push_back(std::move(s));
    }

    if (j.contains("popups")) {
        for (const auto& jp : j["popups"]) {
            m.popups.push_back(popup_from_json(jp, "model popups"));
        }
    }

    if (j.contains("load_failure") && !j["load_failure"].is_null()) {
        const json& lf = j["load_failure"];
        m.load_failure.probability = require_key(lf, "probability", "load_failure").get<double>();
        if (lf.contains("applies_to")) {
            for (const auto& s : lf["applies_to"]) {
                m.load_failure.applies_to.push_back(s.get<std::string>());
            }
        }
    }

    if (j.contains("login_screen") && !j["login_screen"].is_null()) {
        const json& ls = j["login_screen"];
        LoginScreen login;
        login.screen = require_string(ls, "screen", "login_screen");
        login.username_field = require_string(ls, "username_field", "login_screen");
        login.password_field = require_string(ls, "password_field", "login_screen");
        login.submit = require_string(ls, "submit", "login_screen");
        login.username = optional_string(ls, "username", "");
        login.password = optional_string(ls, "password", "");
        m.login_screen = std::move(login);
    }

    validate_model(m);
    return m;
}

json model_to_json(const AppModel& m) {
    json j;
    j["version"] = m.version;
    j["start_screen"] = m.start_screen;
    json screens = json::array();
    for (const auto& s : m.screens) {
        json js;
        js["id"] = s.id;
        js["title"] = s.title;
        js["dimensions"] = s.dimensions;
        js["is_loading_stub"] = s.is_loading_stub;
        js["requires_login"] = s.requires_login;
        json objects = json::array();
        for (const auto& o : s.objects) {
            objects.push_back(object_to_json(o));
        }
        js["objects"] = objects;
        json transitions = json::array();
        for (const auto& t : s.transitions) {
            transitions.push_back({{"trigger", {{"object", t.trigger_object},
                                                {"action", to_string(t.trigger_action)}}},
                                   {"target", t.target},
                                   {"guards", t.guards}});
        }
        js["transitions"] = transitions;
        screens.push_back(std::move(js));
    }
    j["screens"] = screens;
    json popups = json::array();
    for (const auto& p : m.popups) {
        popups.push_back(popup_to_json(p));
    }
    j["popups"] = popups;
    j["load_failure"] = {{"probability", m.load_failure.probability},
                         {"applies_to", m.load_failure.applies_to}};
    if (m.login_screen) {
        j["login_screen"] = {{"screen", m.login_screen->screen},
                             {"username_field", m.login_screen->username_field},
                             {"password_field", m.login_screen->password_field},
                             {"submit", m.login_screen->submit},
                             {"username", m.login_screen->username},
                             {"password", m.login_screen->password}};
    } else {
        j["login_screen"] = nullptr;
    }
    return j;
}

std::string serialize_model(const AppModel& m) {
    return model_to_json(m).dump(2) + "\n";
}

void validate_model(const AppModel& m) {
    std::set<std::string> screen_ids;
    for (const auto& s : m.screens) {
        if (!screen_ids.insert(s.id).second) {
            throw ReferenceError("duplicate screen id \"" + s.id + "\"");
        }
    }
    if (!m.find_screen(m.start_screen)) {
        throw ReferenceError("start_screen \"" + m.start_screen + "\" not found");
    }

    for (const auto& s : m.screens) {
        const std::string ctx = "screen \"" + s.id + "\"";
        if (s.dimensions[0] <= 0 || s.dimensions[1] <= 0) {
            throw ParseError(ctx + ": dimensions must be positive");
        }
        std::set<std::string> object_ids;
        for (const auto& o : s.objects) {
            if (!object_ids.insert(o.id).second) {
                throw ReferenceError(ctx + ": duplicate object id \"" + o.id + "\"");
            }
            if (o.size[0] <= 0 || o.size[1] <= 0) {
                throw ParseError(ctx + ": object \"" + o.id + "\" size must be positive");
            }
            const bool select_like = is_select_type(o.obj_type);
            if (select_like && o.options.empty()) {
                throw ParseError(ctx + ": object \"" + o.id + "\" is a " + to_string(o.obj_type) +
                                 " and must declare options");
            }
            if (!select_like && !o.options.empty()) {
                throw ParseError(ctx + ": object \"" + o.id + "\" of type " + to_string(o.obj_type) +
                                 " cannot declare options");
            }
        }
        for (const auto& o : s.objects) {
            if (o.parent_id && !s.find_object(*o.parent_id)) {
                throw ReferenceError(ctx + ": object \"" + o.id + "\" parent \"" + *o.parent_id +
                                     "\" not found on this screen");
            }
        }
        for (const auto& t : s.transitions) {
            if (!s.find_object(t.trigger_object)) {
                throw ReferenceError(ctx + ": transition trigger object \"" + t.trigger_object +
                                     "\" not found");
            }
            if (!m.find_screen(t.target)) {
                throw ReferenceError(ctx + ": transition target \"" + t.target + "\" not found");
            }
            for (const auto& g : t.guards) {
                if (!s.find_object(g)) {
                    throw ReferenceError(ctx + ": transition guard \"" + g + "\" not found");
                }
            }
        }
        if (s.requires_login && !m.login_screen) {
            throw ReferenceError(ctx + ": requires_login set but the model has no login_screen");
        }
    }

    std::set<std::string> popup_ids;
    for (const auto& p : m.popups) {
        const std::string ctx = "popup \"" + p.id + "\"";
        if (!popup_ids.insert(p.id).second) {
            throw ReferenceError("duplicate popup id \"" + p.id + "\"");
        }
        if (p.buttons.empty()) {
            throw ParseError(ctx + ": needs at least one button");
        }
        int dismiss_count = 0;
        for (const auto& b : p.buttons) {
            if (b.effect == ButtonEffect::dismiss) {
                ++dismiss_count;
            }
        }
        if (dismiss_count != 1) {
            throw ParseError(ctx + ": exactly one button must have effect dismiss");
        }
        if (!m.find_screen(p.trigger.screen)) {
            throw ReferenceError(ctx + ": trigger screen \"" + p.trigger.screen + "\" not found");
        }
        if (p.trigger.fire_on_nth_action < 1) {
            throw ParseError(ctx + ": fire_on_nth_action must be positive");
        }
    }

    if (m.load_failure.probability < 0.0 || m.load_failure.probability > 1.0) {
        throw ParseError("load_failure probability must lie in [0, 1]");
    }
    for (const auto& sid : m.load_failure.applies_to) {
        if (!m.find_screen(sid)) {
            throw ReferenceError("load_failure applies_to screen \"" + sid + "\" not found");
        }
    }

    if (m.login_screen) {
        const auto& ls = *m.login_screen;
        const Screen* s = m.find_screen(ls.screen);
        if (!s) {
            throw ReferenceError("login_screen screen \"" + ls.screen + "\" not found");
        }
        if (s->requires_login) {
            throw ReferenceError("login screen \"" + ls.screen + "\" cannot itself require login");
        }
        for (const std::string& fid : {ls.username_field, ls.password_field, ls.submit}) {
            if (!s->find_object(fid)) {
                throw ReferenceError("login_screen field \"" + fid + "\" not found on screen \"" +
                                     ls.screen + "\"");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Mutations

std::vector<MutationOp> load_mutations(const std::string& document) {
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("mutations: ") + e.what());
    }
    if (!j.is_array()) {
        throw ParseError("mutations: top-level value must be an array");
    }
    std::vector<MutationOp> ops;
    for (const auto& jo : j) {
        MutationOp op;
        op.kind = mutation_kind_from_string(require_string(jo, "kind", "mutation"));
        op.target = require_string(jo, "target", "mutation");
        op.payload = jo.contains("payload") ? jo["payload"] : json::object();
        ops.push_back(std::move(op));
    }
    return ops;
}

namespace {

// Resolves the mutation target to a mutable object; honors an optional
// payload "screen" disambiguator.
std::pair<Screen*, UIObject*> resolve_target(AppModel& m, const MutationOp& op) {
    std::optional<std::string> screen_filter;
    if (op.payload.contains("screen")) {
        screen_filter = op.payload["screen"].get<std::string>();
    }
    for (auto& s : m.screens) {
        if (screen_filter && s.id != *screen_filter) {
            continue;
        }
        for (auto& o : s.objects) {
            if (o.id == op.target) {
                return {&s, &o};
            }
        }
    }
    return {nullptr, nullptr};
}

[[noreturn]] void unknown_target(const MutationOp& op) {
    throw ReferenceError("mutation " + to_string(op.kind) + ": unknown target \"" + op.target + "\"");
}

} // namespace

AppModel apply_mutation(const AppModel& input, const MutationOp& op) {
    AppModel m = input; // work on a copy; the input model stays untouched

    switch (op.kind) {
        case MutationKind::rename_object: {
            auto [s, o] = resolve_target(m, op);
            if (!o) unknown_target(op);
            o->name = require_key(op.payload, "new_name", "rename_object").get<std::string>();
            break;
        }
        case MutationKind::retype_object: {
            auto [s, o] = resolve_target(m, op);
            if (!o) unknown_target(op);
            o->obj_type = obj_type_from_string(
                require_key(op.payload, "new_type", "retype_object").get<std::string>());
            if (is_select_type(o->obj_type)) {
                if (op.payload.contains("options")) {
                    o->options = op.payload["options"].get<std::vector<std::string>>();
                }
            } else {
                o->options.clear();
            }
            break;
        }
        case MutationKind::reparent_object: {
            auto [s, o] = resolve_target(m, op);
            if (!o) unknown_target(op);
            const json& np = require_key(op.payload, "new_parent", "reparent_object");
            if (np.is_null()) {
                o->parent_id.reset();
            } else {
                o->parent_id = np.get<std::string>();
            }
            break;
        }
        case MutationKind::move_object: {
            auto [s, o] = resolve_target(m, op);
            if (!o) unknown_target(op);
            const json& pos = require_key(op.payload, "position", "move_object");
            o->position = {pos[0].get<int>(), pos[1].get<int>()};
            break;
        }
        case MutationKind::delete_object: {
            auto [s, o] = resolve_target(m, op);
            if (!o) unknown_target(op);
            const std::string victim = o->id;
            const std::optional<std::string> heir = o->parent_id;
            // Cascade: drop transitions triggered by the object, drop it from
            // guard lists, and hand children to the victim's parent.
            auto& transitions = s->transitions;
            transitions.erase(std::remove_if(transitions.begin(), transitions.end(),
                                             [&](const Transition& t) {
                                                 return t.trigger_object == victim;
                                             }),
                              transitions.end());
            for (auto& t : transitions) {
                t.guards.erase(std::remove(t.guards.begin(), t.guards.end(), victim),
                               t.guards.end());
            }
            for (auto& other : s->objects) {
                if (other.parent_id == victim) {
                    other.parent_id = heir;
                }
            }
            auto& objects = s->objects;
            objects.erase(std::remove_if(objects.begin(), objects.end(),
                                         [&](const UIObject& obj) { return obj.id == victim; }),
                          objects.end());
            break;
        }
        case MutationKind::add_object: {
            Screen* s = nullptr;
            for (auto& sc : m.screens) {
                if (sc.id == op.target) {
                    s = &sc;
                    break;
                }
            }
            if (!s) unknown_target(op);
            UIObject o = object_from_json(require_key(op.payload, "object", "add_object"),
                                          "add_object");
            if (s->find_object(o.id)) {
                throw ReferenceError("add_object: object id \"" + o.id + "\" already exists on \"" +
                                     s->id + "\"");
            }
            if (op.payload.contains("guard_of")) {
                const std::string trigger = op.payload["guard_of"].get<std::string>();
                bool wired = false;
                for (auto& t : s->transitions) {
                    if (t.trigger_object == trigger) {
                        t.guards.push_back(o.id);
                        wired = true;
                    }
                }
                if (!wired) {
                    throw ReferenceError("add_object: guard_of trigger \"" + trigger +
                                         "\" has no transition on screen \"" + s->id + "\"");
                }
            }
            s->objects.push_back(std::move(o));
            break;
        }
        case MutationKind::add_select_option: {
            auto [s, o] = resolve_target(m, op);
            if (!o) unknown_target(op);
            if (!is_select_type(o->obj_type)) {
                throw ReferenceError("add_select_option: target \"" + op.target +
                                     "\" is not a listbox/combobox");
            }
            o->options.push_back(require_key(op.payload, "option", "add_select_option").get<std::string>());
            break;
        }
        case MutationKind::add_popup: {
            if (!m.find_screen(op.target)) unknown_target(op);
            json jp = require_key(op.payload, "popup", "add_popup");
            if (!jp.contains("trigger")) {
                jp["trigger"] = json::object();
            }
            if (!jp["trigger"].contains("screen")) {
                jp["trigger"]["screen"] = op.target;
            }
            if (!jp["trigger"].contains("fire_on_nth_action")) {
                jp["trigger"]["fire_on_nth_action"] = 1;
            }
            m.popups.push_back(popup_from_json(jp, "add_popup"));
            break;
        }
        case MutationKind::set_load_failure: {
            if (!m.find_screen(op.target)) unknown_target(op);
            m.load_failure.probability =
                require_key(op.payload, "probability", "set_load_failure").get<double>();
            if (std::find(m.load_failure.applies_to.begin(), m.load_failure.applies_to.end(),
                          op.target) == m.load_failure.applies_to.end()) {
                m.load_failure.applies_to.push_back(op.target);
            }
            break;
        }
    }

    validate_model(m); // a mutation may not leave the model invalid
    m.version = util::bump_version(input.version);
    return m;
}

// ---------------------------------------------------------------------------
// ScreenView

json ScreenView::to_json() const {
    json j;
    j["screen_id"] = screen_id;
    j["title"] = title;
    j["dimensions"] = dimensions;
    j["loading"] = loading;
    j["objects_blocked"] = objects_blocked;
    json objs = json::array();
    for (const auto& o : objects) {
        json jo = object_to_json(o);
        jo["value"] = o.value;
        objs.push_back(std::move(jo));
    }
    j["objects"] = objs;
    if (popup) {
        j["popup"] = {{"id", popup->id},
                      {"title", popup->title},
                      {"text", popup->text},
                      {"buttons", popup->buttons}};
    } else {
        j["popup"] = nullptr;
    }
    return j;
}

const UIObject* ScreenView::find_by_id(const std::string& object_id) const {
    for (const auto& o : objects) {
        if (o.id == object_id) {
            return &o;
        }
    }
    return nullptr;
}

const UIObject* ScreenView::find_by_name(const std::string& object_name) const {
    for (const auto& o : objects) {
        if (o.name == object_name) {
            return &o;
        }
    }
    return nullptr;
}

std::string ScreenView::parent_name_of(const UIObject& obj) const {
    if (!obj.parent_id) {
        return "";
    }
    if (const UIObject* p = find_by_id(*obj.parent_id)) {
        return p->name;
    }
    return "";
}

// ---------------------------------------------------------------------------
// SimSession

SimSession::SimSession(const AppModel& m, std::uint64_t seed) : model_(&m) {
    state_.rng.seed(seed);
    enter_screen(m.start_screen);
}

const Screen& SimSession::screen() const {
    const Screen* s = model_->find_screen(state_.current_screen);
    // current_screen always references a validated screen id
    return *s;
}

void SimSession::enter_screen(const std::string& screen_id) {
    const Screen* target = model_->find_screen(screen_id);
    std::string effective = screen_id;
    if (target && target->requires_login && !state_.logged_in && model_->login_screen) {
        state_.pending_redirect = screen_id;
        effective = model_->login_screen->screen;
    }
    state_.current_screen = effective;
    state_.stub_active = false;
    const auto& lf = model_->load_failure;
    if (lf.probability > 0.0 &&
        std::find(lf.applies_to.begin(), lf.applies_to.end(), effective) != lf.applies_to.end()) {
        const double u = util::u01(state_.rng());
        state_.stub_active = u < lf.probability;
    }
}

void SimSession::maybe_fire_popup(const std::string& screen_id) {
    if (state_.active_popup) {
        return;
    }
    const int count = state_.screen_action_counts[screen_id];
    for (const auto& p : model_->popups) {
        if (p.trigger.screen != screen_id) {
            continue;
        }
        if (p.trigger.one_shot) {
            if (count == p.trigger.fire_on_nth_action &&
                !state_.fired_one_shots.count(p.id)) {
                state_.fired_one_shots.insert(p.id);
                state_.active_popup = p.id;
                return;
            }
        } else if (count > 0 && count % p.trigger.fire_on_nth_action == 0) {
            state_.active_popup = p.id;
            return;
        }
    }
}

ScreenView SimSession::observe() const {
    const Screen& s = screen();
    ScreenView view;
    view.screen_id = s.id;
    view.title = s.title;
    view.dimensions = s.dimensions;
    view.loading = state_.stub_active || s.is_loading_stub;
    view.objects_blocked = state_.active_popup.has_value();
    if (!view.loading) {
        for (const auto& o : s.objects) {
            if (!o.visible) {
                continue;
            }
            UIObject live = o;
            auto it = state_.values.find({s.id, o.id});
            if (it != state_.values.end()) {
                live.value = it->second;
            }
            view.objects.push_back(std::move(live));
        }
    }
    if (state_.active_popup) {
        for (const auto& p : model_->popups) {
            if (p.id == *state_.active_popup) {
                PopupView pv;
                pv.id = p.id;
                pv.title = p.title;
                pv.text = p.body_text;
                for (const auto& b : p.buttons) {
                    pv.buttons.push_back(b.text);
                }
                view.popup = std::move(pv);
                break;
            }
        }
    }
    return view;
}

ActionOutcome SimSession::popup_click(const std::string& button_text) {
    if (!state_.active_popup) {
        return {OutcomeKind::invalid_action, {}, "no active popup"};
    }
    const PopupSpec* spec = nullptr;
    for (const auto& p : model_->popups) {
        if (p.id == *state_.active_popup) {
            spec = &p;
            break;
        }
    }
    const PopupButton* hit = nullptr;
    for (const auto& b : spec->buttons) {
        if (b.text == button_text) {
            hit = &b;
            break;
        }
    }
    if (!hit) {
        for (const auto& b : spec->buttons) {
            if (util::iequals(b.text, button_text)) {
                hit = &b;
                break;
            }
        }
    }
    if (!hit) {
        return {OutcomeKind::no_such_object, {}, "popup has no button \"" + button_text + "\""};
    }
    state_.active_popup.reset();
    if (hit->effect == ButtonEffect::abort) {
        // The dialog cancelled the flow; the application falls back to its
        // entry screen. Entered values persist per screen.
        state_.pending_redirect.reset();
        enter_screen(model_->start_screen);
    }
    return {OutcomeKind::ok, {}, ""};
}

ActionOutcome SimSession::fire_transition(const UIObject& obj, ActionVerb verb) {
    const Screen& s = screen();

    // Login submit is special-cased: matching credentials flip logged_in and
    // honor a pending redirect before any declared transition.
    if (model_->login_screen && s.id == model_->login_screen->screen &&
        obj.id == model_->login_screen->submit && verb == ActionVerb::click) {
        const auto& ls = *model_->login_screen;
        auto value_of = [&](const std::string& oid) {
            auto it = state_.values.find({s.id, oid});
            return it == state_.values.end() ? std::string() : it->second;
        };
        if (value_of(ls.username_field) == ls.username &&
            value_of(ls.password_field) == ls.password && !ls.username.empty()) {
            state_.logged_in = true;
            if (state_.pending_redirect) {
                const std::string dest = *state_.pending_redirect;
                state_.pending_redirect.reset();
                enter_screen(dest);
                return {OutcomeKind::ok, {}, "logged in"};
            }
        } else {
            // Wrong credentials: the click lands but nothing navigates.
            return {OutcomeKind::ok, {}, "login rejected"};
        }
    }

    for (const auto& t : s.transitions) {
        if (t.trigger_object != obj.id || t.trigger_action != verb) {
            continue;
        }
        std::vector<std::string> unmet;
        for (const auto& g : t.guards) {
            auto it = state_.values.find({s.id, g});
            if (it == state_.values.end() || it->second.empty()) {
                unmet.push_back(g);
            }
        }
        if (!unmet.empty()) {
            return {OutcomeKind::guard_unsatisfied, unmet, "guards not satisfied"};
        }
        enter_screen(t.target);
        return {OutcomeKind::ok, {}, ""};
    }
    return {OutcomeKind::ok, {}, ""}; // no transition wired; the click still lands
}

ActionOutcome SimSession::object_action(const Action& action) {
    if (state_.stub_active || screen().is_loading_stub) {
        return {OutcomeKind::load_failure, {}, "screen failed to load"};
    }
    const Screen& s = screen();
    const UIObject* obj = s.find_object(action.target);
    if (!obj || !obj->visible) {
        return {OutcomeKind::no_such_object, {}, "no object \"" + action.target + "\" on screen \"" +
                                                     s.id + "\""};
    }
    if (!obj->enabled) {
        return {OutcomeKind::invalid_action, {}, "object \"" + action.target + "\" is disabled"};
    }

    switch (action.verb) {
        case ActionVerb::enter:
            if (obj->obj_type != ObjType::textfield && obj->obj_type != ObjType::password_field) {
                return {OutcomeKind::invalid_action, {},
                        "cannot enter text into a " + to_string(obj->obj_type)};
            }
            state_.values[{s.id, obj->id}] = action.value;
            return fire_transition(*obj, ActionVerb::enter);
        case ActionVerb::select: {
            if (!is_select_type(obj->obj_type)) {
                return {OutcomeKind::invalid_action, {},
                        "cannot select on a " + to_string(obj->obj_type)};
            }
            if (std::find(obj->options.begin(), obj->options.end(), action.value) ==
                obj->options.end()) {
                return {OutcomeKind::invalid_action, {},
                        "\"" + action.value + "\" is not an option of \"" + obj->name + "\""};
            }
            state_.values[{s.id, obj->id}] = action.value;
            return fire_transition(*obj, ActionVerb::select);
        }
        case ActionVerb::check: {
            if (obj->obj_type != ObjType::checkbox) {
                return {OutcomeKind::invalid_action, {},
                        "cannot check a " + to_string(obj->obj_type)};
            }
            if (action.value != "on" && action.value != "off") {
                return {OutcomeKind::invalid_action, {}, "check value must be \"on\" or \"off\""};
            }
            state_.values[{s.id, obj->id}] = action.value;
            return fire_transition(*obj, ActionVerb::check);
        }
        case ActionVerb::click: {
            if (obj->obj_type == ObjType::checkbox) {
                auto& v = state_.values[{s.id, obj->id}];
                v = (v == "on") ? "off" : "on";
                return fire_transition(*obj, ActionVerb::click);
            }
            if (obj->obj_type != ObjType::button && obj->obj_type != ObjType::link) {
                return {OutcomeKind::invalid_action, {},
                        "cannot click a " + to_string(obj->obj_type)};
            }
            return fire_transition(*obj, ActionVerb::click);
        }
        default:
            return {OutcomeKind::invalid_action, {}, "unsupported object action"};
    }
}

ActionOutcome SimSession::perform(const Action& action) {
    ++state_.action_counter;

    if (state_.active_popup && action.verb != ActionVerb::popup_click) {
        return {OutcomeKind::blocked_by_popup, {}, "a popup is blocking the screen"};
    }

    const std::string screen_at_start = state_.current_screen;
    ActionOutcome outcome;
    bool counts_on_screen = false;

    switch (action.verb) {
        case ActionVerb::popup_click:
            outcome = popup_click(action.target);
            break;
        case ActionVerb::open: {
            if (!model_->find_screen(action.target)) {
                outcome = {OutcomeKind::no_such_screen, {}, "no screen \"" + action.target + "\""};
            } else {
                enter_screen(action.target);
                outcome = {OutcomeKind::ok, {}, ""};
            }
            break;
        }
        case ActionVerb::refresh:
            counts_on_screen = true;
            enter_screen(state_.current_screen);
            outcome = {OutcomeKind::ok, {}, ""};
            break;
        case ActionVerb::wait:
            counts_on_screen = true;
            outcome = {OutcomeKind::ok, {}, ""};
            break;
        default:
            counts_on_screen = true;
            outcome = object_action(action);
            break;
    }

    if (counts_on_screen) {
        ++state_.screen_action_counts[screen_at_start];
        maybe_fire_popup(screen_at_start);
    }
    return outcome;
}

Snapshot SimSession::snapshot() const {
    return state_;
}

void SimSession::restore(const Snapshot& snap) {
    state_ = snap;
}

} // namespace aft::model
