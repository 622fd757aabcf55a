//! XOR equations over whole payloads: partial solutions, a retained residue,
//! and how one later-known value unlocks the rest.

use iecs::gf2::{LinearSystem, Unknown};

fn main() -> iecs::Result<()> {
    let s = |segment| Unknown::new(segment, 1, 0);
    let value = |segment: u32| vec![segment as u8 * 17, 0x40 | segment as u8];
    let xor = |a: &[u8], b: &[u8]| a.iter().zip(b).map(|(x, y)| x ^ y).collect::<Vec<u8>>();

    let mut sys = LinearSystem::new([s(1), s(2), s(3), s(4)], 2);
    sys.push_equation(&[s(1), s(2)], xor(&value(1), &value(2)))?;
    sys.push_equation(&[s(2), s(3)], xor(&value(2), &value(3)))?;
    sys.push_equation(&[s(4)], value(4))?;
    println!("solved now: {:?}", sys.eliminate()?);
    println!("residue: {} equations over {:?}", sys.equations(), sys.referenced());

    let unlocked = sys.inject_known(s(2), &value(2))?;
    println!("after learning s2: {unlocked:?}");
    for (u, v) in sys.solved() {
        assert_eq!(*v, value(u.segment));
    }
    println!("all values check out");
    Ok(())
}
