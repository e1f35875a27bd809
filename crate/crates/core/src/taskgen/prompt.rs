use super::GenerationRequest;
use crate::scene::{AssetRecord, TaskType};

const NUM_OBJECTS: &str = "[Num_of_objects]";
const ASSET_LIST: &str = "[Asset list]";
const TASK_FRAGMENT: &str = "[Task specified prompt]";

const BASE: &str = r#"You are an assistant specializing in simulation scene design. Your task is to select at least [Num_of_objects] objects from the provided list (each with specific names and descriptions) to include in a simulation scene. Each object should be strategically positioned relative to at least one other object using the specified spatial orientations: left, right, front, back, and top.

Available Objects and corresponding states:

[Asset list]

Your Task:

Design a task-oriented scene graph consisting of the following three parts:

1. Instruction: You need to design a tabletop manipulation task that will change the layout of the objects. If the task does not require changing the object's state, it should mimic a typical 'pick and place' activity as seen in daily life. However, if the task involves altering the object's state—such as opening or closing a cabinet—select an appropriate verb to accurately describe the action needed to modify the object's state.
   - Focus on clear and functional interaction between the objects.
   - When you need to refer to an object, you can use the provided name. You can change the name based on the instruction, but please do not create any ambiguity.
   - The goal condition is sufficient to judge the instruction.
   - [Task specified prompt]

2. Goal Conditions: Define the objectives of the Instruction, specifying:
   - The names and unique identifiers (UIDs) of the objects involved.
   - Their final states (choose from the given states; if none, state as 'none').
   - The relative positions intended between the objects (using 'front', 'back', 'left', 'right', 'near', 'top').
   - If multiple conditions are applied, they should be expressed in disjunctive normal form. Each atomic variable should determine whether a single spatial relation or object state is satisfied.

3. Scene Graph: Design a scene graph that captures the spatial relationships and states of the objects in the scene.
   - Begin by describing the initial scene, emphasizing the spatial relationships among objects within a natural setting. This will help you write the scene graph.
   - Each edge in the scene graph must have two objects.
   - Include sufficient edges to represent all connections and interactions.

Note: Assume all objects are on the table by default, so avoid specifying 'top' or spatial relations with it. The instruction must alter the initial layout, and the goal condition should not match the initial scene graph. Avoid the common mistake of creating a circular transformation where reversing the objects' positions results in the same spatial relationships (e.g., "A on the left of B" becoming "B on the right of A").

Output Format:

Return the output in the following JSON format:
{
    "instruction": "Instruction for the task", // within 30 words
    "goal_conditions": // disjunctive normal form: multiple conditions combined with AND inside [], connected by OR between []. Example structure provided below.
    [
        [
            {
            "obj1": "Name of the first object for the task",
            "obj1_uid": "UID of the first object",
            "obj1_state": "state of obj1",
            "obj2": "Name of the second object for the task, or 'none' if not needed",
            "obj2_uid": "UID of the second object, or 'none' if not needed",
            "position": "front/back/left/right/near/top, or 'none' if not needed"
            }
        ]
    ],
    "scene_graph": {
        "description": "Describe the initial scene layout, emphasizing the spatial relationships between objects. Include details about the objects involved and their specific positions relative to one another.",
        "edges": [
            {
                "obj1": "Name of the first object",
                "obj1_uid": "UID of the first object",
                "position": "front/back/left/right/near/top",
                "obj2": "Name of the second object", // can not be None
                "obj2_uid": "UID of the second object"
            }
            // ...
        ],
        "nodes": [
            {
                "obj_uid": "UID",
                "state": "initial state"
            }
            // ...
        ]
    }
}
"#;

const SPATIAL: &str = "Design an instruction that assesses a model's spatial reasoning ability, which is the capability to understand, interpret, and infer indirect spatial relationships among objects to determine their precise locations. The instruction must clearly describe a task that involves interpreting complex spatial configurations.";

const APPEARANCE: &str = "Design an instruction that evaluates a model's ability to reason about and recognize visual attributes such as color, size, shape, material, and other distinctive characteristics. The instruction must use these visual traits to uniquely identify objects without relying on their names or identifiers.";

const COMMON_SENSE: &str = "Design an instruction to evaluate a model's common sense reasoning. Present a clear, everyday scenario that involves a practical problem or goal related to human needs. The model should apply basic principles like cause and effect or logical outcomes to choose one specific action that solves the problem.";

/// Task-specific instruction fragment; long-horizon tasks have none.
pub fn task_fragment(task_type: TaskType) -> Option<&'static str> {
    match task_type {
        TaskType::Spatial => Some(SPATIAL),
        TaskType::Appearance => Some(APPEARANCE),
        TaskType::CommonSense => Some(COMMON_SENSE),
        TaskType::LongHorizon => None,
    }
}

fn asset_block(a: &AssetRecord) -> String {
    let states = if a.states.is_empty() {
        "None".to_string()
    } else {
        a.states.join(", ")
    };
    format!(
        "- Name: {}\n  UID: {}\n  Description: {}\n  States: {}\n",
        a.name, a.uid, a.description, states
    )
}

pub fn build_prompt(req: &GenerationRequest) -> String {
    let assets: Vec<String> = req.pool.iter().map(asset_block).collect();
    let mut text = BASE
        .replace(NUM_OBJECTS, &req.num_objects_min.to_string())
        .replace(ASSET_LIST, assets.join("\n").trim_end());
    match task_fragment(req.task_type) {
        Some(fragment) => text = text.replace(TASK_FRAGMENT, fragment),
        None => text = text.replace(&format!("\n   - {TASK_FRAGMENT}"), ""),
    }
    text
}

/// Prompt for a retry: the original request followed by the reason the
/// previous reply was rejected.
pub fn with_feedback(prompt: &str, diagnostic: &str) -> String {
    format!(
        "{prompt}\nYour previous reply was rejected: {diagnostic}\nReturn a corrected JSON object in the same format.\n"
    )
}
