// The coordinator table: FIFO order, neighbor resolution and message
// counting for both triggered schemes.

use cavmerge::coordinator::Coordinator;
use cavmerge::model::{Lane, Snapshot};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut c = Coordinator::new();
    let a = c.admit(Lane::Main, 0.0, 18.0, 0.0);
    let b = c.admit(Lane::Merge, 0.0, 19.0, 1.0);
    let d = c.admit(Lane::Merge, 0.0, 17.0, 2.0);
    let e = c.admit(Lane::Main, 0.0, 20.0, 3.0);
    for id in c.ids() {
        let nb = c.neighbors(id);
        println!("vehicle {id}: preceding {:?}, conflict {:?}, dependents {:?}", nb.ip, nb.ic, c.dependents(id));
    }
    assert_eq!(c.neighbors(d).ip, Some(b));
    assert_eq!(c.neighbors(e).ic, Some(d));

    // event-triggered solve of `e`: sync request, downloads, upload, notifications
    let states = [(a, 60.0, 18.0), (b, 40.0, 19.0), (d, 20.0, 17.0), (e, 5.0, 20.0)];
    let current = |id: usize| {
        states
            .iter()
            .find(|s| s.0 == id)
            .map(|&(_, x, v)| Snapshot { x, v, u: 0.0, t_last: 3.0 })
    };
    let (view, msgs) = c.sync(e, (5.0, 20.0, 0.0), 3.0, current, true);
    c.count_reads(view.count());
    println!("event-triggered sync of {e}: {msgs:?}");

    // self-triggered solve of `d`: pull the stored rows of its neighbors
    c.upload(b, 40.0, 19.0, -0.5, 3.0, Some(3.6));
    let mut reads = 0;
    for about in c.neighbors(d).iter() {
        if let Some((snap, t_next)) = c.download(about, 3.2) {
            println!("vehicle {d} reads {about}: x={:.3} v={:.3} next solve {t_next:?}", snap.x, snap.v);
            reads += 1;
        }
    }
    c.count_reads(reads);
    c.upload(d, 20.0, 17.0, 0.2, 3.2, Some(3.5));

    let counts = c.counts();
    println!("{counts:?}");
    assert!(counts.audit());

    c.depart(62.0, 18.0, 3.5);
    println!("after departure the crossed vehicle {:?} stays as the lead record", c.departed().map(|r| r.id));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("coordinator example");
}
