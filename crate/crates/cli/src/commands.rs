//! Command implementations: thin orchestration over the library flows.

use crate::config::Config;
use crate::state::{
    AuthorityFile, PublicState, StateDir, UserFile, UserKeyFile, AUTHORITIES_FILE, CONFIG_FILE,
    LEDGER_FILE, PARAMS_FILE, PUBLIC_FILE, TRANSCRIPT_FILE,
};
use crate::CliError;
use datagov::attacks::{run_inference_demo, run_rogue_key_demo, AttackVerdict};
use datagov::ceremony::{
    build_transcript, issue_user_key, params_digest, run_authority_setup, run_trusted_setup,
    verify_transcript, SetupBehavior, SetupContribution, SetupParticipant, Transcript,
};
use datagov::ledger::{Address, Ledger, LedgerConfig};
use datagov::storage::{retrieve_file, share_file, StorageError, SystemHandles, UserKeyMaterial};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

pub fn rng_from_seed(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(seed) => ChaCha20Rng::seed_from_u64(seed),
        None => {
            let mut entropy = [0u8; 32];
            rand::rngs::OsRng.fill_bytes(&mut entropy);
            ChaCha20Rng::from_seed(entropy)
        }
    }
}

fn flow<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Flow(e.to_string())
}

pub fn cmd_init(state: &StateDir) -> Result<(), CliError> {
    state.ensure()?;
    if state.exists(CONFIG_FILE) {
        println!("configuration already present at {}", state.root().join(CONFIG_FILE).display());
        return Ok(());
    }
    state.save_bytes(CONFIG_FILE, crate::config::EXAMPLE_CONFIG.as_bytes())?;
    println!(
        "wrote starter configuration to {}",
        state.root().join(CONFIG_FILE).display()
    );
    Ok(())
}

pub fn cmd_setup(state: &StateDir, config_path: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let config = if config_path.exists() {
        Config::load(config_path)?
    } else if state.exists(CONFIG_FILE) {
        Config::load(&state.root().join(CONFIG_FILE))?
    } else {
        return Err(CliError::Config(format!(
            "no configuration found at {} (write one based on the README example)",
            config_path.display()
        )));
    };
    state.ensure()?;
    if state.exists(PARAMS_FILE) {
        let params: datagov::abe::SystemParams = state.params()?;
        println!(
            "trusted setup already complete (params digest {})",
            hex::encode(params_digest(&params))
        );
        return Ok(());
    }
    let mut rng = rng_from_seed(seed);
    let roster = config.roster();
    let addresses: Vec<Address> = roster.iter().map(|r| r.address).collect();
    let mut ledger = Ledger::new(LedgerConfig {
        aa_list: addresses.iter().copied().collect(),
        sys_windows: config.deadlines.sys,
        auth_windows: config.deadlines.auth,
        insecure_no_pok: config.demo.insecure_no_pok,
    });
    let participants: Vec<SetupParticipant> = roster
        .iter()
        .map(|spec| {
            Ok(SetupParticipant {
                address: spec.address,
                contribution: SetupContribution::generate(config.system.k, &mut rng)
                    .map_err(flow)?,
                behavior: SetupBehavior::Honest,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let run = run_trusted_setup(&mut ledger, &participants, config.slots(), true, &mut rng)
        .map_err(flow)?;
    let transcript =
        build_transcript(&ledger, config.system.k, config.slots(), run.txs).map_err(flow)?;
    state.save_bytes(TRANSCRIPT_FILE, &transcript.to_bytes())?;
    state.save_json(PARAMS_FILE, &run.params)?;
    state.save_ledger(&ledger)?;
    let config_text =
        toml::to_string_pretty(&config).map_err(|e| CliError::Internal(e.to_string()))?;
    state.save_bytes(CONFIG_FILE, config_text.as_bytes())?;
    println!(
        "trusted setup complete: {} participants, k={}, params digest {}",
        participants.len(),
        config.system.k,
        hex::encode(params_digest(&run.params))
    );
    Ok(())
}

pub fn cmd_authority_setup(state: &StateDir, seed: Option<u64>) -> Result<(), CliError> {
    let config = Config::load(&state.root().join(CONFIG_FILE))?;
    if state.exists(PUBLIC_FILE) {
        println!("authority setup already complete");
        return Ok(());
    }
    let params = state.params()?;
    let mut ledger = state.ledger()?;
    let mut rng = rng_from_seed(seed);
    let roster = config.roster();
    let run = run_authority_setup(&mut ledger, &params, &roster, &mut rng).map_err(flow)?;

    // extend the persisted transcript with the authority stage
    let previous = Transcript::from_bytes(&state.load_bytes(TRANSCRIPT_FILE)?).map_err(flow)?;
    let mut txs = previous.txs;
    txs.extend(run.txs);
    let transcript =
        build_transcript(&ledger, config.system.k, config.slots(), txs).map_err(flow)?;
    state.save_bytes(TRANSCRIPT_FILE, &transcript.to_bytes())?;

    let authorities: Vec<AuthorityFile> = run
        .authorities
        .into_iter()
        .map(|record| AuthorityFile {
            spec: record.spec,
            slot_start: record.slot_start,
            slot_end: record.slot_end,
            slot_secrets: record.slot_secrets,
        })
        .collect();
    state.save_json(AUTHORITIES_FILE, &authorities)?;
    state.save_json(
        PUBLIC_FILE,
        &PublicState {
            vc_params: run.vc_params,
            slot_publics: run.slot_publics,
            mapping: run.mapping,
        },
    )?;
    state.save_ledger(&ledger)?;
    println!(
        "authority setup complete: {} authorities, {} attribute slots + trust",
        roster.len(),
        config.attribute_count()
    );
    Ok(())
}

pub fn cmd_register(state: &StateDir, user: &str, fee: Option<u64>) -> Result<(), CliError> {
    let config = Config::load(&state.root().join(CONFIG_FILE))?;
    let mut ledger = state.ledger()?;
    let address = Address::from_label(user);
    let fee = fee.unwrap_or(config.system.registration_fee_gwei);
    let ctx = ledger.context(address, fee);
    let gid = ledger.sc_reg_register(ctx).map_err(flow)?;
    state.save_ledger(&ledger)?;
    state.save_user(&UserFile {
        name: user.to_string(),
        address,
        gid,
        issued: BTreeMap::new(),
        key: None,
    })?;
    println!("registered {user} as {address}, gid {}", hex::encode(gid.0));
    Ok(())
}

pub fn cmd_keygen(
    state: &StateDir,
    user: &str,
    attrs: &str,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let params = state.params()?;
    let public = state.public_state()?;
    let authorities = state.authorities()?;
    let mut user_file = state.user(user)?;
    let mut rng = rng_from_seed(seed);

    let mut issued: BTreeMap<Address, BTreeSet<String>> = BTreeMap::new();
    for name in attrs.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let slot = public
            .mapping
            .slot_of(name)
            .ok_or_else(|| CliError::Config(format!("unknown attribute {name:?}")))?;
        let owner = public
            .mapping
            .owner_of_slot(slot)
            .expect("mapped slots have owners");
        issued
            .entry(owner.address)
            .or_default()
            .insert(name.to_string());
    }
    let records: Vec<datagov::ceremony::AuthorityRecord> = authorities
        .into_iter()
        .map(|file| datagov::ceremony::AuthorityRecord {
            spec: file.spec,
            slot_start: file.slot_start,
            slot_end: file.slot_end,
            slot_secrets: file.slot_secrets,
        })
        .collect();
    let key = issue_user_key(
        &params,
        &public.vc_params,
        &public.mapping,
        &records,
        &public.slot_publics,
        &user_file.gid,
        &issued,
        &mut rng,
    )
    .map_err(flow)?;
    user_file.issued = issued;
    user_file.key = Some(UserKeyFile {
        commitment: key.commitment,
        key_parts: key.key_parts,
        v: key.v,
        h_pub: key.h_pub,
    });
    state.save_user(&user_file)?;
    println!(
        "issued {} key parts to {user} (attributes: {attrs})",
        public.mapping.slots()
    );
    Ok(())
}

pub fn cmd_share(
    state: &StateDir,
    file: &Path,
    policy: &str,
    keyword: Option<&str>,
    owner: &str,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let config = Config::load(&state.root().join(CONFIG_FILE))?;
    let params = state.params()?;
    let public = state.public_state()?;
    let mut ledger = state.ledger()?;
    let mut rng = rng_from_seed(seed);
    let bytes = std::fs::read(file)
        .map_err(|e| CliError::NotFound(format!("cannot read {}: {e}", file.display())))?;
    let mut required = BTreeSet::new();
    for name in policy.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let slot = public
            .mapping
            .slot_of(name)
            .ok_or_else(|| CliError::Config(format!("unknown attribute {name:?}")))?;
        required.insert(slot);
    }
    let handles = SystemHandles {
        params: &params,
        slot_pubs: &public.slot_publics,
        mode: config.policy_mode(),
    };
    let store = state.store();
    let index = share_file(
        &store,
        &mut ledger,
        Address::from_label(owner),
        &handles,
        &required,
        &bytes,
        keyword,
        &mut rng,
    )
    .map_err(storage_error)?;
    state.save_ledger(&ledger)?;
    println!(
        "shared {} ({} bytes) under policy [{policy}] as log entry {index}",
        file.display(),
        bytes.len()
    );
    Ok(())
}

pub fn cmd_retrieve(
    state: &StateDir,
    user: &str,
    entry: u64,
    out: &Path,
) -> Result<(), CliError> {
    let ledger = state.ledger()?;
    let user_file = state.user(user)?;
    let key = user_file.key.ok_or_else(|| {
        CliError::Flow(format!("user {user} holds no key parts; run keygen first"))
    })?;
    let entries = ledger
        .sc_log_get(entry as i64)
        .map_err(|e| CliError::NotFound(e.to_string()))?;
    let material = UserKeyMaterial {
        key_parts: key.key_parts,
        v: key.v,
        h_pub: key.h_pub,
    };
    let store = state.store();
    let bytes = retrieve_file(&store, &entries[0].ct, &material).map_err(storage_error)?;
    std::fs::write(out, &bytes)
        .map_err(|e| CliError::Internal(format!("write {}: {e}", out.display())))?;
    println!("recovered {} bytes into {}", bytes.len(), out.display());
    Ok(())
}

fn storage_error(e: StorageError) -> CliError {
    match e {
        StorageError::PolicyDenied => CliError::PolicyDenied,
        StorageError::NotFound => CliError::NotFound("content not found".into()),
        other => CliError::Flow(other.to_string()),
    }
}

pub fn cmd_attack_rogue_key(insecure_no_pok: bool, seed: Option<u64>) -> Result<(), CliError> {
    let mut rng = rng_from_seed(seed);
    let started = Instant::now();
    let report = run_rogue_key_demo(insecure_no_pok, &mut rng).map_err(flow)?;
    let verdict = AttackVerdict {
        attack: "rogue-key".into(),
        configuration: if insecure_no_pok {
            "insecure-no-pok".into()
        } else {
            "default".into()
        },
        success: report.registration_accepted && report.payload_recovered,
        elapsed_ms: started.elapsed().as_millis(),
    };
    println!(
        "{}",
        serde_json::to_string(&verdict).map_err(|e| CliError::Internal(e.to_string()))?
    );
    println!(
        "{}",
        serde_json::to_string(&serde_json::json!({
            "registration_accepted": report.registration_accepted,
            "payload_recovered": report.payload_recovered,
        }))
        .map_err(|e| CliError::Internal(e.to_string()))?
    );
    Ok(())
}

pub fn cmd_attack_infer(
    participants: usize,
    trials: usize,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut rng = rng_from_seed(seed);
    let started = Instant::now();
    let report = run_inference_demo(participants, trials, &mut rng).map_err(flow)?;
    let verdict = AttackVerdict {
        attack: "infer-s".into(),
        configuration: format!("participants={participants}"),
        success: report.matches == report.trials && report.trials > 0,
        elapsed_ms: started.elapsed().as_millis(),
    };
    println!(
        "{}",
        serde_json::to_string(&verdict).map_err(|e| CliError::Internal(e.to_string()))?
    );
    println!(
        "{}",
        serde_json::to_string(&serde_json::json!({
            "matches": report.matches,
            "trials": report.trials,
        }))
        .map_err(|e| CliError::Internal(e.to_string()))?
    );
    Ok(())
}

pub fn cmd_verify_transcript(state: &StateDir, file: Option<&Path>) -> Result<(), CliError> {
    let bytes = match file {
        Some(path) => std::fs::read(path)
            .map_err(|e| CliError::NotFound(format!("cannot read {}: {e}", path.display())))?,
        None => state.load_bytes(TRANSCRIPT_FILE)?,
    };
    let report = verify_transcript(&bytes).map_err(|e| CliError::Verify(e.to_string()))?;
    println!(
        "transcript ok: {} transactions from {} participants, k={}, {} slots, params digest {}",
        report.transactions, report.participants, report.k, report.slots, report.params_digest_hex
    );
    Ok(())
}

pub fn cmd_status(state: &StateDir) -> Result<(), CliError> {
    if !state.exists(LEDGER_FILE) {
        println!("state dir {}: empty (run setup first)", state.root().display());
        return Ok(());
    }
    let ledger = state.ledger()?;
    println!("state hash: {}", hex::encode(ledger.state_hash()));
    if state.exists(PARAMS_FILE) {
        let params = state.params()?;
        println!("params digest: {}", hex::encode(params_digest(&params)));
        println!("k = {}, slots = {}", params.k, params.slots);
    }
    if state.exists(PUBLIC_FILE) {
        let public = state.public_state()?;
        println!("attribute slots: {}", public.mapping.attribute_count);
        for row in &public.mapping.rows {
            if row.is_trust {
                println!("  {} (trust) -> slot {}", row.address, row.slot_start);
            } else {
                println!(
                    "  {} -> slots {}..{} {:?}",
                    row.address, row.slot_start, row.slot_end, row.attributes
                );
            }
        }
    }
    println!("log entries: {}", ledger.sc_log_get(-1).map(|e| e.len()).unwrap_or(0));
    println!("trace:\n{}", ledger.trace_lines());
    Ok(())
}
