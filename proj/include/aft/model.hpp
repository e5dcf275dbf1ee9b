#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "aft/util.hpp"

namespace aft::model {

enum class ObjType {
    button,
    textfield,
    password_field,
    listbox,
    combobox,
    checkbox,
    link,
    label,
};

std::string to_string(ObjType t);
ObjType obj_type_from_string(const std::string& s);

bool is_input_type(ObjType t);  // accepts a value (enter/select/check targets)
bool is_select_type(ObjType t); // carries an options list

// Actions a simulated user (or the engine) can perform against a session.
enum class ActionVerb {
    open,        // jump to a screen by id, like typing a URL
    click,
    enter,
    select,
    check,
    refresh,     // re-enter the current screen, re-drawing load flakiness
    wait,
    popup_click, // press a button on the active popup, by button text
};

std::string to_string(ActionVerb v);
ActionVerb action_verb_from_string(const std::string& s);

struct UIObject {
    std::string id;
    std::string name;
    ObjType obj_type = ObjType::button;
    std::optional<std::string> parent_id;
    std::string text;
    std::array<int, 2> position{0, 0};
    std::array<int, 2> size{1, 1};
    bool required = false;
    std::vector<std::string> options;
    std::string value; // session state; always empty in model definitions
    bool enabled = true;
    bool visible = true;
};

struct Transition {
    std::string trigger_object;
    ActionVerb trigger_action = ActionVerb::click;
    std::string target;
    std::vector<std::string> guards; // object ids that must hold a value
};

struct Screen {
    std::string id;
    std::string title;
    std::array<int, 2> dimensions{1024, 768};
    std::vector<UIObject> objects;
    std::vector<Transition> transitions;
    bool is_loading_stub = false;
    bool requires_login = false;

    const UIObject* find_object(const std::string& object_id) const;
};

enum class ButtonEffect { dismiss, abort };

struct PopupButton {
    std::string text;
    ButtonEffect effect = ButtonEffect::dismiss;
};

struct PopupTrigger {
    std::string screen;
    int fire_on_nth_action = 1;
    bool one_shot = true;
};

struct PopupSpec {
    std::string id;
    std::string title;
    std::string body_text;
    std::vector<PopupButton> buttons;
    PopupTrigger trigger;
};

struct LoadFailure {
    double probability = 0.0;
    std::vector<std::string> applies_to;
};

struct LoginScreen {
    std::string screen;
    std::string username_field;
    std::string password_field;
    std::string submit;
    // Credentials the simulated application accepts.
    std::string username;
    std::string password;
};

struct AppModel {
    std::string version = "v1";
    std::string start_screen;
    std::vector<Screen> screens;
    std::vector<PopupSpec> popups;
    LoadFailure load_failure;
    std::optional<LoginScreen> login_screen;

    const Screen* find_screen(const std::string& screen_id) const;
    // First screen containing the object id, in declaration order.
    std::pair<const Screen*, const UIObject*> find_object(const std::string& object_id) const;
};

AppModel load_model(const std::string& document);
std::string serialize_model(const AppModel& m);
nlohmann::json model_to_json(const AppModel& m);

// Throws ReferenceError / ParseError when an invariant does not hold.
void validate_model(const AppModel& m);

// ---------------------------------------------------------------------------
// Mutations

enum class MutationKind {
    rename_object,
    retype_object,
    reparent_object,
    move_object,
    delete_object,
    add_object,
    add_select_option,
    add_popup,
    set_load_failure,
};

std::string to_string(MutationKind k);
MutationKind mutation_kind_from_string(const std::string& s);

struct MutationOp {
    MutationKind kind = MutationKind::rename_object;
    std::string target;          // object id (screen id for add_* and set_load_failure)
    nlohmann::json payload;      // kind-specific parameters
};

std::vector<MutationOp> load_mutations(const std::string& document);

// Returns a new model with a bumped version string; the input is untouched.
AppModel apply_mutation(const AppModel& m, const MutationOp& op);

// ---------------------------------------------------------------------------
// Session

struct PopupView {
    std::string id;
    std::string title;
    std::string text;
    std::vector<std::string> buttons;
};

struct ScreenView {
    std::string screen_id;
    std::string title;
    std::array<int, 2> dimensions{0, 0};
    bool loading = false;
    bool objects_blocked = false;           // true while a popup is active
    std::vector<UIObject> objects;          // visible objects with live values
    std::optional<PopupView> popup;

    nlohmann::json to_json() const;
    const UIObject* find_by_id(const std::string& object_id) const;
    const UIObject* find_by_name(const std::string& object_name) const;
    // Name of the object's parent ("" when it has none).
    std::string parent_name_of(const UIObject& obj) const;
};

struct Action {
    ActionVerb verb = ActionVerb::click;
    std::string target; // object id / screen id / popup button text
    std::string value;
};

enum class OutcomeKind {
    ok,
    no_such_object,
    no_such_screen,
    blocked_by_popup,
    guard_unsatisfied,
    load_failure,
    invalid_action,
};

std::string to_string(OutcomeKind k);

struct ActionOutcome {
    OutcomeKind kind = OutcomeKind::ok;
    std::vector<std::string> unmet_guards;
    std::string message;

    bool ok() const { return kind == OutcomeKind::ok; }
};

// Full copy of the mutable session state; restoring one is an identity on
// everything observable, including the RNG stream.
struct Snapshot {
    std::string current_screen;
    std::map<std::pair<std::string, std::string>, std::string> values;
    std::optional<std::string> active_popup;
    std::uint64_t action_counter = 0;
    std::map<std::string, int> screen_action_counts;
    std::set<std::string> fired_one_shots;
    std::mt19937_64 rng;
    bool logged_in = false;
    std::optional<std::string> pending_redirect;
    bool stub_active = false;
};

class SimSession {
public:
    SimSession(const AppModel& m, std::uint64_t seed);

    ScreenView observe() const;
    ActionOutcome perform(const Action& action);

    Snapshot snapshot() const;
    void restore(const Snapshot& snap);

    const std::string& current_screen() const { return state_.current_screen; }
    std::uint64_t action_counter() const { return state_.action_counter; }
    bool logged_in() const { return state_.logged_in; }
    bool popup_active() const { return state_.active_popup.has_value(); }
    const AppModel& app_model() const { return *model_; }

private:
    const AppModel* model_;
    Snapshot state_;

    void enter_screen(const std::string& screen_id);
    void maybe_fire_popup(const std::string& screen_id);
    const Screen& screen() const;
    ActionOutcome object_action(const Action& action);
    ActionOutcome popup_click(const std::string& button_text);
    ActionOutcome fire_transition(const UIObject& obj, ActionVerb verb);
};

} // namespace aft::model
