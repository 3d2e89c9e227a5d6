mod common;

use common::{log_leaf, log_root, seed};
use pqhs::audit::{leaf_hash, verify_checkpoint, verify_inclusion, verify_inclusion_at, AuditError, AuditTree, InclusionProof, SignedCheckpoint};
use pqhs::hashsig::{hsig_keygen, HashSigParams};

fn records(n: usize) -> Vec<Vec<u8>> {
    (0..n).map(|i| format!("entry {i}").into_bytes()).collect()
}

#[test]
fn every_proof_verifies_and_substitutions_fail() {
    for size in 1..=32 {
        let recs = records(size);
        let tree = AuditTree::from_records(recs.clone());
        let root = tree.root().unwrap();
        let oracle: Vec<[u8; 32]> = recs.iter().map(|r| log_leaf(r)).collect();
        assert_eq!(root.0, log_root(&oracle));
        for (i, rec) in recs.iter().enumerate() {
            let proof = tree.prove_inclusion(i as u64).unwrap();
            assert_eq!(InclusionProof::from_bytes(&proof.to_bytes()).unwrap(), proof);
            assert!(verify_inclusion(&root, i as u64, &leaf_hash(rec), &proof).unwrap());
            let wrong = leaf_hash(format!("forged {i}").as_bytes());
            assert!(!verify_inclusion(&root, i as u64, &wrong, &proof).unwrap());

            let mut substituted = recs.clone();
            substituted[i] = b"substituted".to_vec();
            assert_ne!(AuditTree::from_records(substituted).root().unwrap(), root);
        }
    }
}

#[test]
fn proofs_bound_to_index_and_size() {
    let recs = records(11);
    let tree = AuditTree::from_records(recs.clone());
    let root = tree.root().unwrap();
    let proof = tree.prove_inclusion(4).unwrap();
    let leaf = leaf_hash(&recs[4]);
    assert!(matches!(verify_inclusion(&root, 5, &leaf, &proof), Err(AuditError::MalformedProof)));
    // Some (index, size) pairs share a proof shape; a checkpoint pins the size.
    let mut resized = proof.clone();
    resized.tree_size = 16;
    let (_, mut sk) = hsig_keygen(HashSigParams { h: 1, w: 4 }, &seed("audit-size", 0)).unwrap();
    let cp = tree.checkpoint(&mut sk).unwrap();
    assert!(verify_inclusion_at(&cp, 4, &leaf, &proof).unwrap());
    assert!(!verify_inclusion_at(&cp, 4, &leaf, &resized).unwrap());
    let mut truncated = proof.clone();
    truncated.siblings.pop();
    assert!(matches!(verify_inclusion(&root, 4, &leaf, &truncated), Err(AuditError::MalformedProof)));
    assert_eq!(tree.prove_inclusion(11), Err(AuditError::IndexOutOfRange { index: 11, size: 11 }));
}

#[test]
fn incremental_and_batch_roots_agree() {
    let recs = records(50);
    let mut tree = AuditTree::new();
    assert!(matches!(tree.root(), Err(AuditError::EmptyTree)));
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(tree.append(r), i as u64);
        assert_eq!(tree.root().unwrap(), AuditTree::from_records(recs[..=i].to_vec()).root().unwrap());
    }
}

#[test]
fn checkpoints_consume_one_index_each() {
    let (pk, mut sk) = hsig_keygen(HashSigParams::SMALL, &seed("audit-cp", 0)).unwrap();
    let mut tree = AuditTree::new();
    for i in 0..5u64 {
        tree.append(format!("r{i}").as_bytes());
        let before = sk.next_index();
        let cp = tree.checkpoint(&mut sk).unwrap();
        assert_eq!(sk.next_index(), before + 1);
        assert!(verify_checkpoint(&pk, &cp));
        assert!(tree.matches_checkpoint(&cp));
        let (params, decoded) = SignedCheckpoint::from_frame(&cp.to_frame(&pk.params)).unwrap();
        assert_eq!(params, pk.params);
        assert_eq!(decoded, cp);
        let mut lying = cp.clone();
        lying.tree_size += 1;
        assert!(!verify_checkpoint(&pk, &lying));
    }
}

#[test]
fn h1_checkpoint_key_exhausts_after_two() {
    let (_, mut sk) = hsig_keygen(HashSigParams { h: 1, w: 4 }, &seed("audit-h1", 0)).unwrap();
    let tree = AuditTree::from_records(records(3));
    tree.checkpoint(&mut sk).unwrap();
    tree.checkpoint(&mut sk).unwrap();
    assert!(matches!(tree.checkpoint(&mut sk), Err(AuditError::Signing(_))));
}
