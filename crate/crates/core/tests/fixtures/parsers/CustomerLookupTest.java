package com.lks;

import static org.junit.jupiter.api.Assertions.*;
import static org.mockito.Mockito.when;

import org.junit.jupiter.api.*;
import org.junit.jupiter.api.extension.ExtendWith;
import org.junit.jupiter.params.ParameterizedTest;
import org.junit.jupiter.params.provider.ValueSource;
import org.mockito.InjectMocks;
import org.mockito.Mock;
import org.mockito.junit.jupiter.MockitoExtension;

/**
 * Lookup tests. The word @Test in this comment is not a test.
 */
@ExtendWith(MockitoExtension.class)
class CustomerLookupTest {

    @Mock
    private CustomerRepository repository;

    @InjectMocks
    private CustomerLookup lookup;

    @BeforeEach
    void setUp() {
        when(repository.findAll()).thenReturn(java.util.List.of());
    }

    @AfterEach
    void tearDown() {
        // @AfterAll would be a class hook; this one is not an annotation
    }

    @Test
    void findsByEmail() {
        String note = "@Test inside a string";
        char at = '@';
        assertNotNull(lookup.find("alice@example.com"));
    }

    @ParameterizedTest
    @ValueSource(strings = {"ALICE@EXAMPLE.COM", "Alice@Example.com"})
    void caseInsensitive(String email) {
        assertNotNull(lookup.find(email));
    }

    @org.junit.jupiter.api.RepeatedTest(3)
    void stable() {
        assertTrue(true);
    }

    @Nested
    class WhenRepositoryFails {
        @Test
        void surfacesError() {
            String block = """
                @Test
                void fake() {}
                """;
            assertThrows(IllegalStateException.class, () -> lookup.find(block));
        }
    }
}

class EmailFormatTest {
    @Test
    void rejectsMissingAt() {
        assertFalse(EmailFormat.valid("alice.example.com"));
    }

    @Disabled("flaky")
    @Test
    void slow() {}
}
