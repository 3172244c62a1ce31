use newton_sos::bconv::{bconv_member, witness_tails, BconvOutcome, BconvWitness};
use newton_sos::newton::EvenRegion;
use newton_sos::poly::{int, Exponent};

fn e(c: &[u32]) -> Exponent {
    Exponent::new(c.to_vec())
}

fn region() -> EvenRegion {
    EvenRegion::from_bases(2, [e(&[16, 0]), e(&[0, 10])]).unwrap()
}

#[test]
fn written_witnesses_are_valid() {
    let w = BconvWitness::new(e(&[11, 7]), vec![e(&[16, 0]), e(&[4, 22]), e(&[16, 0]), e(&[0, 12])]).unwrap();
    assert_eq!(w.depth(), 3);
    assert!(w.verify_in(&region()));
    let w = BconvWitness::new(
        e(&[13, 2]),
        vec![e(&[16, 0]), e(&[16, 0]), e(&[0, 10]), e(&[16, 0]), e(&[0, 12])],
    )
    .unwrap();
    assert_eq!(w.depth(), 4);
    assert_eq!(witness_tails(&w).unwrap(), vec![e(&[5, 2]), e(&[2, 4]), e(&[4, 3]), e(&[0, 6])]);
}

#[test]
fn dropping_the_first_point() {
    // (11,7) - ½(16,0) = ¼(4,22) + ⅛(16,0) + ⅛(0,12), i.e. twice that is a depth-2 witness.
    let w = BconvWitness::new(e(&[6, 14]), vec![e(&[4, 22]), e(&[16, 0]), e(&[0, 12])]).unwrap();
    assert_eq!(w.recombine(), vec![int(6), int(14)]);
    assert!(w.verify_in(&region()));
}

#[test]
fn recombination_is_dyadic() {
    let w = BconvWitness::new(e(&[13, 2]), vec![e(&[16, 0]), e(&[16, 0]), e(&[0, 10]), e(&[16, 0]), e(&[0, 12])])
        .unwrap();
    assert_eq!(w.recombine(), vec![int(13), int(2)]);
    // Non-integral recombination is rejected.
    assert!(BconvWitness::new(e(&[1, 1]), vec![e(&[2, 0]), e(&[0, 4])]).is_err());
}

#[test]
fn search_finds_minimal_depth() {
    for alpha in [e(&[11, 7]), e(&[13, 2])] {
        let out = bconv_member(&alpha, &region(), 8);
        let w = out.witness().expect("member");
        assert!(w.verify_in(&region()));
        for shallower in 1..w.depth() {
            assert!(bconv_member(&alpha, &region(), shallower).witness().is_none());
        }
    }
}

#[test]
fn outside_the_hull_is_proven_absent() {
    assert_eq!(bconv_member(&e(&[1, 1]), &region(), 6), BconvOutcome::ProvenAbsent);
    assert_eq!(bconv_member(&e(&[7, 4]), &region(), 6), BconvOutcome::ProvenAbsent);
}

#[test]
fn axis_squares_region() {
    let r = EvenRegion::from_bases(2, [e(&[2, 0]), e(&[0, 2])]).unwrap();
    assert_eq!(bconv_member(&e(&[1, 1]), &r, 3).witness().map(|w| w.depth()), Some(1));
    assert_eq!(bconv_member(&e(&[1, 0]), &r, 3), BconvOutcome::ProvenAbsent);
}
