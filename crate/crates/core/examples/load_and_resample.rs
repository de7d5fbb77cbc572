//! Loads a keyframe animation, pads it with StandInit, resamples it at 25 fps
//! with Bezier handles and mirrors it.
//!
//! `cargo run --example load_and_resample [-- <keyframe.json>]`

use embogen::anim::{load_keyframe_animation, standinit, JointTable, JOINT_NAMES};
use embogen::preprocess::{bezier_resample, mirror, pad_standinit, HandleMode, STANDINIT_LEAD_FRAMES};
use embogen::synthetic::synthetic_corpus;

fn main() -> anyhow::Result<()> {
    let table = JointTable::pepper();
    let anim = match std::env::args().nth(1) {
        Some(path) => load_keyframe_animation(path.as_ref(), &table)?,
        None => synthetic_corpus(7, 1, 60).remove(0),
    };
    println!(
        "{}: {} keyframes over frames {}..={}, {} led events",
        anim.name,
        anim.keyframes.len(),
        anim.first_frame(),
        anim.last_frame(),
        anim.led_events.len()
    );

    let padded = pad_standinit(&anim, &standinit(), STANDINIT_LEAD_FRAMES);
    let smooth = bezier_resample(&padded, &table, HandleMode::Smooth);
    let linear = bezier_resample(&padded, &table, HandleMode::Linear);
    let mirrored = mirror(&smooth, &table, false)?;
    println!("resampled to {} frames at {} fps", smooth.len(), smooth.fps);

    let j = 2; // LShoulderPitch
    println!("frame  {:>14} {:>14} {:>14}", "smooth", "linear", "mirrored R");
    for t in (0..smooth.len()).step_by(5) {
        println!(
            "{t:>5}  {:>14.6} {:>14.6} {:>14.6}",
            smooth.frames[t].joints[j],
            linear.frames[t].joints[j],
            mirrored.frames[t].joints[j + 6]
        );
    }
    println!("(column 1-2: {}, column 3: {})", JOINT_NAMES[j], JOINT_NAMES[j + 6]);
    Ok(())
}
