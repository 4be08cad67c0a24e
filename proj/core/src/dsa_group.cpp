#include "beran/crypto.hpp"

// Fixed 3072/256 DSA group shared by every FiniteField key in the system.
// Generated once with OpenSSL (FIPS 186-4 parameter generation) and pinned
// so key generation is a single modular exponentiation.

namespace beran {

const std::string& dsa_group_p_hex() {
    static const std::string p =
    "c591db1c7894ef55316fe1e55cab530f747308e1c1e8e78c254e924cd05db00851a9138ce33f"
    "de54b9ae050222e3c2a46a4bf1b42854dc695c41cf1a3b797488f58c5be71ababf1d42eb2534"
    "491dcf2dff44e7358dbfdf2176051ce7388754962d7d80d4d11208d24229e6f1b1f9387371de"
    "e7595924c93203fd3280c5f1ebf5c93fa7fe30f532d3da078a7850dd2b5391270edf0e3ac8e0"
    "823137ee36cb95c2e7bbf2d3fb1ff0c7e9d43df8fab49a8ec017b8fde1bd074e487421a4ec73"
    "970ccb19b251b4c371e4d38f81442055a6555a26059fff00704e75a6b20630b7521ded8e812a"
    "171386fa42963d4510bbf3adca2689980c05fa7d8b00edb1e12859ca8c375b44af6536ecc15e"
    "b32ffc061cd5765113f5282e22ae7c31168dfa9ccbea04f031b4fe2e5731c5b4b2743b588f89"
    "f0ec37f5fe94b9d03996c2e48bc0ab9ec3759b0f2d8dfd01d9cfec274adb3275c187fbec7e18"
    "8a98b5f8bf360ddc39c8e7a86a11f36ce600414caba81b7ea7d62ed9e41a94629bd7f03abfc3"
    "de625245";
    return p;
}

const std::string& dsa_group_q_hex() {
    static const std::string q =
    "a2d2e3d29dc296522dba453bc542ef82f00d878f45ab1cd36356d66ce1741043";
    return q;
}

const std::string& dsa_group_g_hex() {
    static const std::string g =
    "3652b66bddaa2c2b68fd7fecd965408fe670ecbae8ef3785df85d46c35d08bb265c37226ce32"
    "acd0fa1672fefdf1dd024b06201c58337054556de1197d87df78a1dd66c35cfb68ee7f835443"
    "912558873052fee6093b20d502bc5b804fedb0341d85b3a82a1e0bd1f114daa14b1916acf242"
    "cc3b05fcf5123b47334d91de0f0cfebece43a7543c45624704ce8ce62a6c239632decfeda11a"
    "b4c9a1a339b70179ad349b06cb6e0c5c937ee1b2e2ea1cedd95c13caea2b0298bcbfbca1d886"
    "4c9253661daf05fce38b6d951a5d468f8467119c595b6441475c43cc6c3486ff05de3abd9dd0"
    "19ebfced8bac9322d2551cff69c81eb9679f8793a46735316b299cd7887cdf4358977c4121c4"
    "6c0f6091c8d591c387901ed8a80e1d8f9b1e263881009eb1d680e3d5d36f2d01fee23acfd92e"
    "7e3acad542b29d5a406658b58ea1879406be6e548e60fb73023a211a1fbedac2dcef3a383c20"
    "b92b40d53f1366aabcd1910bf5dfba5aed20869e1453ac0bc6da9a9440c0678a73e574873f3b"
    "f50a2c85";
    return g;
}

}  // namespace beran
