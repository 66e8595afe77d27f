mod common;

use common::shifts::{central_epe, SHIFTS};
use flowqa::flow::{estimate_flow, FlowParams};
use flowqa::synth::{circular_shift, textured_frame};

#[test]
fn integer_shifts_are_recovered() {
    let mut good = 0;
    for (k, &(dx, dy)) in SHIFTS.iter().enumerate() {
        let a = textured_frame(128, 128, 100 + k as u64);
        let b = circular_shift(&a, dx, dy).unwrap();
        let flow = estimate_flow(&a, &b, &FlowParams::default()).unwrap();
        let epe = central_epe(&flow, dx as f32, dy as f32);
        println!("shift ({dx:+}, {dy:+}): epe {epe:.4}");
        if epe <= 0.5 {
            good += 1;
        }
    }
    assert!(good >= 9, "only {good}/10 shifts within 0.5 px");
}
