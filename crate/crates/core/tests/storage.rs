use std::fs;

use msckpt::schedule::{SlotId, StepIndex};
use msckpt::storage::format::{decode, encode, encoded_len, HEADER_LEN};
use msckpt::storage::{
    file_backend, simulated_backend, CheckpointPayload, Level1Pool, Level2Backend, SimulatedDevice, TransferEngine,
};
use msckpt::Error;
use proptest::prelude::*;

fn payload(step: usize, bytes: Vec<u8>) -> CheckpointPayload {
    CheckpointPayload::new(StepIndex(step), bytes)
}

fn store_then_fetch(backend: &dyn Level2Backend, p: &CheckpointPayload) -> CheckpointPayload {
    // fetch queued right behind the store: the worker must serve the store first
    let store = backend.begin_store(p.clone()).unwrap();
    let fetch = backend.begin_fetch(p.step).unwrap();
    backend.wait(&store).unwrap();
    backend.wait(&fetch).unwrap().into_payload().unwrap()
}

#[test]
fn file_layout_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let backend = file_backend(dir.path()).unwrap();
    let p = payload(7, vec![1, 2, 3]);
    backend.wait(&backend.begin_store(p.clone()).unwrap()).unwrap();
    let data = fs::read(dir.path().join("ckpt_7.bin")).unwrap();
    assert_eq!(data.len(), encoded_len(3));
    assert_eq!(&data[..4], b"CKPT");
    assert_eq!(&data[4..6], &1u16.to_le_bytes());
    assert_eq!(&data[6..14], &7u64.to_le_bytes());
    assert_eq!(&data[14..22], &3u64.to_le_bytes());
    assert_eq!(&data[HEADER_LEN..HEADER_LEN + 3], &[1, 2, 3]);
    let crc = crc32c::crc32c(&data[..HEADER_LEN + 3]);
    assert_eq!(&data[HEADER_LEN + 3..], &crc.to_le_bytes());
}

#[test]
fn corrupted_file_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let backend = file_backend(dir.path()).unwrap();
    let p = payload(3, vec![9; 64]);
    backend.wait(&backend.begin_store(p).unwrap()).unwrap();
    let path = dir.path().join("ckpt_3.bin");
    let mut data = fs::read(&path).unwrap();
    data[HEADER_LEN + 10] ^= 0x40;
    fs::write(&path, &data).unwrap();
    let err = backend.wait(&backend.begin_fetch(StepIndex(3)).unwrap()).unwrap_err();
    assert!(matches!(err, Error::ChecksumMismatch { .. }), "{err:?}");

    data.truncate(20);
    fs::write(&path, &data).unwrap();
    let err = backend.wait(&backend.begin_fetch(StepIndex(3)).unwrap()).unwrap_err();
    assert!(matches!(err, Error::ChecksumMismatch { .. }), "{err:?}");
}

#[test]
fn file_renamed_to_wrong_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let backend = file_backend(dir.path()).unwrap();
    backend.wait(&backend.begin_store(payload(1, vec![5; 8])).unwrap()).unwrap();
    fs::rename(dir.path().join("ckpt_1.bin"), dir.path().join("ckpt_2.bin")).unwrap();
    let err = backend.wait(&backend.begin_fetch(StepIndex(2)).unwrap()).unwrap_err();
    assert!(matches!(err, Error::ChecksumMismatch { .. }));
}

#[test]
fn unknown_key_is_missing() {
    let dir = tempfile::tempdir().unwrap();
    let file = file_backend(dir.path()).unwrap();
    assert!(matches!(file.begin_fetch(StepIndex(4)), Err(Error::MissingKey(4))));
    let sim = simulated_backend(1e9, 0.0);
    assert!(matches!(sim.begin_fetch(StepIndex(4)), Err(Error::MissingKey(4))));
}

#[test]
fn overwrite_replaces_payload() {
    let backend = TransferEngine::new(SimulatedDevice::instant());
    store_then_fetch(&backend, &payload(2, vec![1; 4]));
    let second = payload(2, vec![2; 4]);
    assert_eq!(store_then_fetch(&backend, &second), second);
}

#[test]
fn pool_rejects_misuse() {
    let mut pool = Level1Pool::new(2, 4);
    assert!(matches!(pool.save(SlotId(2), payload(0, vec![0; 4])), Err(Error::SlotOutOfRange { slot: 2, capacity: 2 })));
    assert!(matches!(pool.save(SlotId(0), payload(0, vec![0; 3])), Err(Error::SizeMismatch { expected: 4, actual: 3 })));
    assert!(matches!(pool.load(SlotId(1)), Err(Error::EmptySlot(1))));
}

fn random_cycles(backend: &dyn Level2Backend, seed: u64, cycles: usize) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in 0..cycles {
        let len = rng.gen_range(0..2048);
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let p = payload(rng.gen_range(0..64), bytes);
        assert_eq!(store_then_fetch(backend, &p), p, "cycle {i}");
    }
}

#[test]
fn randomized_cycles_file() {
    let dir = tempfile::tempdir().unwrap();
    random_cycles(&file_backend(dir.path()).unwrap(), 1, 200);
}

#[test]
fn randomized_cycles_sim() {
    random_cycles(&simulated_backend(1e12, 0.0), 2, 200);
}

proptest! {
    #[test]
    fn format_round_trips(step in 0usize..1_000_000, bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let p = payload(step, bytes);
        let image = encode(&p);
        prop_assert_eq!(image.len(), encoded_len(p.len()));
        prop_assert_eq!(decode(&image).unwrap(), p);
    }

    #[test]
    fn any_bit_flip_is_caught(bytes in proptest::collection::vec(any::<u8>(), 1..256), pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        let mut image = encode(&payload(5, bytes));
        let i = pos.index(image.len());
        image[i] ^= 1 << bit;
        prop_assert!(decode(&image).is_err());
    }

    #[test]
    fn pool_occupancy_never_exceeds_capacity(ops in proptest::collection::vec((0usize..6, any::<bool>()), 0..64)) {
        let mut pool = Level1Pool::new(4, 8);
        for (slot, save) in ops {
            let result = if save {
                pool.save(SlotId(slot), payload(slot, vec![slot as u8; 8]))
            } else {
                pool.release(SlotId(slot))
            };
            if slot >= 4 {
                let is_out_of_range = matches!(result, Err(Error::SlotOutOfRange { .. }));
                prop_assert!(is_out_of_range);
            }
            prop_assert!(pool.occupancy() <= pool.capacity());
            prop_assert_eq!(pool.bytes(), pool.occupancy() * 8);
            if save && slot < 4 {
                prop_assert_eq!(pool.load(SlotId(slot)).unwrap().bytes.as_ref(), &[slot as u8; 8][..]);
            }
        }
        prop_assert!(pool.peak_occupancy() <= 4);
    }
}
