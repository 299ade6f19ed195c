//! State-directory layout and persistence. Every command loads what it
//! needs from here and writes back what it changed, so flows are resumable
//! across invocations. The directory simulates all parties at once:
//! authority secret material lives next to the public artifacts.

use crate::CliError;
use datagov::abe::{AttributeVector, KeyPart, SlotPublic, SystemParams};
use datagov::ceremony::{AuthoritySpec, MappingTable};
use datagov::ledger::{Address, Gid, Ledger};
use datagov::storage::{ContentHash, ContentStore, StorageError};
use datagov::vc::{VcCommitment, VcParams};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub const CONFIG_FILE: &str = "config.toml";
pub const LEDGER_FILE: &str = "ledger.json";
pub const PARAMS_FILE: &str = "system_params.json";
pub const PUBLIC_FILE: &str = "public.json";
pub const AUTHORITIES_FILE: &str = "authorities.json";
pub const TRANSCRIPT_FILE: &str = "transcript.bin";
pub const USERS_DIR: &str = "users";
pub const CAS_DIR: &str = "cas";

#[derive(Serialize, Deserialize)]
pub struct PublicState {
    pub vc_params: VcParams,
    pub slot_publics: Vec<SlotPublic>,
    pub mapping: MappingTable,
}

#[derive(Serialize, Deserialize)]
pub struct AuthorityFile {
    pub spec: AuthoritySpec,
    pub slot_start: usize,
    pub slot_end: usize,
    pub slot_secrets: Vec<datagov::abe::SlotSecret>,
}

#[derive(Serialize, Deserialize)]
pub struct UserKeyFile {
    pub commitment: VcCommitment,
    pub key_parts: Vec<KeyPart>,
    pub v: AttributeVector,
    #[serde(with = "datagov::algebra::encode::serde_canonical")]
    pub h_pub: Vec<datagov::algebra::G2Point>,
}

#[derive(Serialize, Deserialize)]
pub struct UserFile {
    pub name: String,
    pub address: Address,
    pub gid: Gid,
    pub issued: BTreeMap<Address, BTreeSet<String>>,
    pub key: Option<UserKeyFile>,
}

pub struct StateDir {
    root: PathBuf,
}

impl StateDir {
    pub fn new(root: &Path) -> Self {
        StateDir {
            root: root.to_path_buf(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ensure(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(self.root.join(USERS_DIR)).map_err(|e| {
            CliError::Internal(format!("cannot create state dir {}: {e}", self.root.display()))
        })?;
        std::fs::create_dir_all(self.root.join(CAS_DIR))
            .map_err(|e| CliError::Internal(format!("cannot create cas dir: {e}")))?;
        Ok(())
    }

    pub fn exists(&self, name: &str) -> bool {
        self.root.join(name).exists()
    }

    pub fn save_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.root.join(name);
        let json = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Internal(format!("serialize {name}: {e}")))?;
        std::fs::write(&path, json)
            .map_err(|e| CliError::Internal(format!("write {}: {e}", path.display())))
    }

    pub fn load_json<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Result<T, CliError> {
        let path = self.root.join(name);
        let text = std::fs::read_to_string(&path).map_err(|_| {
            CliError::NotFound(format!(
                "{} not found; run the commands that produce it first",
                path.display()
            ))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Internal(format!("parse {}: {e}", path.display())))
    }

    pub fn save_bytes(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(self.root.join(name), bytes)
            .map_err(|e| CliError::Internal(format!("write {name}: {e}")))
    }

    pub fn load_bytes(&self, name: &str) -> Result<Vec<u8>, CliError> {
        std::fs::read(self.root.join(name))
            .map_err(|_| CliError::NotFound(format!("{name} not found in state dir")))
    }

    pub fn ledger(&self) -> Result<Ledger, CliError> {
        self.load_json(LEDGER_FILE)
    }

    pub fn save_ledger(&self, ledger: &Ledger) -> Result<(), CliError> {
        self.save_json(LEDGER_FILE, ledger)
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        self.load_json(PARAMS_FILE)
    }

    pub fn public_state(&self) -> Result<PublicState, CliError> {
        self.load_json(PUBLIC_FILE)
    }

    pub fn authorities(&self) -> Result<Vec<AuthorityFile>, CliError> {
        self.load_json(AUTHORITIES_FILE)
    }

    pub fn user_path(&self, name: &str) -> String {
        format!("{USERS_DIR}/{name}.json")
    }

    pub fn user(&self, name: &str) -> Result<UserFile, CliError> {
        self.load_json(&self.user_path(name))
    }

    pub fn save_user(&self, user: &UserFile) -> Result<(), CliError> {
        self.save_json(&self.user_path(&user.name), user)
    }

    pub fn store(&self) -> FsStore {
        FsStore {
            dir: self.root.join(CAS_DIR),
        }
    }
}

/// Content-addressed store backed by one file per block.
pub struct FsStore {
    dir: PathBuf,
}

impl ContentStore for FsStore {
    fn put(&self, bytes: &[u8]) -> ContentHash {
        let hash = ContentHash::digest(bytes);
        let path = self.dir.join(format!("{}.bin", hash.to_hex()));
        if !path.exists() {
            std::fs::write(&path, bytes).expect("cas write");
        }
        hash
    }

    fn get(&self, hash: &ContentHash) -> Result<Vec<u8>, StorageError> {
        let path = self.dir.join(format!("{}.bin", hash.to_hex()));
        std::fs::read(&path).map_err(|_| StorageError::NotFound)
    }

    fn has(&self, hash: &ContentHash) -> bool {
        self.dir.join(format!("{}.bin", hash.to_hex())).exists()
    }
}
